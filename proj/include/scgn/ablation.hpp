#pragma once

namespace scgn {

/// Configuration toggles reproducing the published ablation variants.
struct AblationFlags {
    bool use_vdn = true;
    bool shared_vdn_decoder = false;  // mVDN: one trunk, two output heads
    bool use_adv = true;
    bool use_sharp = true;
    bool mvsn = false;  // VSN without pooling/upsampling stages
};

}  // namespace scgn
