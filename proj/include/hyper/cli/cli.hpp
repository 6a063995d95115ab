#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hyper/core/errors.hpp"
#include "hyper/model/model.hpp"
#include "hyper/train/train.hpp"

namespace hyper::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Bad flags or configuration values; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct KeySpec {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Flat key=value run configuration. Every key can also be given as a
/// `--key` flag (underscores become dashes); flags override the config file,
/// which overrides the defaults.
class RunConfig {
 public:
  /// Defaults for a subcommand (pretraining uses 512 negatives and batch 32).
  static RunConfig defaults(std::string_view command = {});
  static const std::vector<KeySpec>& keys();
  static bool known(std::string_view key);

  /// Throws UsageError for unknown keys or malformed lines.
  void merge_text(std::string_view text);
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool empty(const std::string& key) const { return get(key).empty(); }

  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  model::ModelConfig model() const;
  train::TrainConfig training() const;
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Runs one subcommand; returns 0 on success, 1 on a domain error and 2 on a
/// usage error. Diagnostics go to `err`, results to `out`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hyper::cli
