#pragma once

#include <stdexcept>
#include <string>

namespace pampc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Landmark at or behind the camera plane (depth <= depth_epsilon).
class DepthNonPositive : public Error {
 public:
  explicit DepthNonPositive(double depth)
      : Error("landmark depth " + std::to_string(depth) + " m is not positive"), depth_(depth) {}
  double depth() const { return depth_; }

 private:
  double depth_;
};

class EmptyLandmarkSet : public Error {
 public:
  EmptyLandmarkSet() : Error("landmark set is empty") {}
};

class LinearizationFailure : public Error {
 public:
  using Error::Error;
};

class SimDiverged : public Error {
 public:
  SimDiverged(double t, const std::string& why) : Error("simulation diverged at t=" + std::to_string(t) + " s: " + why), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

/// Invalid configuration; key() names the offending dotted key.
class ConfigInvalid : public Error {
 public:
  ConfigInvalid(std::string key, const std::string& why)
      : Error("invalid config key '" + key + "': " + why), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pampc
