#include "pricesim/random.hpp"

#include <cmath>
#include <sstream>

#include "pricesim/errors.hpp"

namespace pricesim {

double RandomStream::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian(double mean, double stddev) {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps the log finite
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    return mean + stddev * (radius * std::cos(two_pi * u2));
}

std::string RandomStream::save_state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void RandomStream::restore_state(const std::string& state) {
    std::istringstream in(state);
    in >> engine_;
    if (in.fail()) {
        throw ConfigError("invalid random stream state");
    }
}

}  // namespace pricesim
