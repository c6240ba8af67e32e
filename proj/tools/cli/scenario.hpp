#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "mshift/chain.hpp"
#include "mshift/matrix_products.hpp"
#include "mshift/observables.hpp"
#include "mshift/processes.hpp"

namespace mshift::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Schema problem located by a JSON pointer (and a line for syntax errors).
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// What the observable block produced, beyond the table itself.
struct ObservableBundle {
  WindowObservable f;
  std::string generator;
  std::optional<double> tail_bound;  // linear process / irf truncation
  std::optional<IrfFamily> irf;
  std::optional<std::size_t> irf_window;
  std::optional<PositiveMatrixFamily> matrices;
  std::optional<std::size_t> matrix_window;
};

struct Scenario {
  Json raw;
  std::string source;  // file path, for messages
  ChainSpec chain;
  ObservableBundle observable;
  Json analysis;  // validated, defaults filled
  std::string out_dir;
};

// Parses and validates; throws SchemaError with field diagnostics. Chain and
// observable blocks are materialized here, before any analysis runs.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& source);

// Typed lookups into the analysis block.
double analysis_number(const Scenario& s, const std::string& key, double fallback);
std::vector<std::size_t> analysis_grid(const Scenario& s, const std::string& key,
                                       std::vector<std::size_t> fallback);

Eigen::MatrixXd parse_matrix(const Json& j, const std::string& where);

}  // namespace mshift::cli
