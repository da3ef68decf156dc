#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

namespace ostrovsky {

/// Base of every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigurationError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Raised when an operator that needs a mean-zero input (the antiderivative,
/// the X_s norm) receives a field with a non-negligible zero mode.
class MeanZeroViolation : public Error {
public:
    explicit MeanZeroViolation(double mean)
        : Error("mean-zero violation: field mean is " + std::to_string(mean)), mean_(mean) {}
    double mean() const noexcept { return mean_; }

private:
    double mean_;
};

class NonfiniteValue : public Error {
public:
    using Error::Error;
};

struct Trajectory;

/// Raised by the time stepper. Carries the step index and whatever part of the
/// trajectory was recorded before the abort.
class BlowupDetected : public Error {
public:
    BlowupDetected(std::int64_t step, double time, const std::string& why,
                   std::shared_ptr<const Trajectory> partial = nullptr)
        : Error("blowup detected at step " + std::to_string(step) + " (t=" + std::to_string(time) +
                "): " + why),
          step_(step), time_(time), partial_(std::move(partial)) {}
    std::int64_t step() const noexcept { return step_; }
    double time() const noexcept { return time_; }
    const std::shared_ptr<const Trajectory>& partial() const noexcept { return partial_; }

private:
    std::int64_t step_;
    double time_;
    std::shared_ptr<const Trajectory> partial_;
};

class NotASoliton : public Error {
public:
    using Error::Error;
};

class ContractionFailure : public Error {
public:
    using Error::Error;
};

/// Quadrature could not reach the requested tolerance within its panel budget.
class AccuracyError : public Error {
public:
    AccuracyError(const std::string& what, double achieved) : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

class BoxTooSmall : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

class LatticeMismatch : public Error {
public:
    using Error::Error;
};

}  // namespace ostrovsky
