#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

// Violated precondition on a public interface.
class contract_violation : public std::invalid_argument {
public:
    explicit contract_violation(const std::string& msg) : std::invalid_argument(msg) {}
};

// A metric whose defining ratio divides by zero (e.g. postselection
// efficiency 0 under huge thresholds).
class undefined_metric : public std::runtime_error {
public:
    explicit undefined_metric(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine missed its accuracy target. Carries the best
// estimate reached so callers can inspect or keep it.
class accuracy_failure : public std::runtime_error {
public:
    accuracy_failure(const std::string& msg, double estimate_, double error_)
        : std::runtime_error(msg), estimate(estimate_), error(error_) {}
    double estimate;
    double error;
};

}  // namespace cvqkd
