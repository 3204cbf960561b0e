#pragma once

#include <sstream>
#include <string>

namespace cmhj {

/// Outcome of a diagnostic check: the measured quantity, the threshold it was
/// held to, and a verdict.
struct CheckReport {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::size_t samples = 0;
    std::string detail;

    std::string summary() const {
        std::ostringstream os;
        os.precision(6);
        os << (pass ? "PASS " : "FAIL ") << name << ": value=" << value << " threshold=" << threshold;
        if (samples) os << " samples=" << samples;
        if (!detail.empty()) os << " (" << detail << ")";
        return os.str();
    }
};

}  // namespace cmhj
