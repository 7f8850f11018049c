#include "scgn/tensor.hpp"

#include <cmath>
#include <sstream>

namespace scgn {

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    return os.str();
}

std::string Rng::state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
}

void Rng::set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (is.fail()) throw std::invalid_argument("malformed rng state string");
}

}  // namespace scgn
