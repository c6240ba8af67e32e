#include "mshift/error.hpp"

namespace mshift {

ZeroMarginalError::ZeroMarginalError(std::size_t step, std::size_t state)
    : InputError("marginal vanishes at step " + std::to_string(step) + ", state " +
                 std::to_string(state)),
      step_(step),
      state_(state) {}

namespace {
std::string assumption_message(const std::string& name, std::optional<std::size_t> step,
                               const std::string& detail) {
  std::string msg = name + " assumption fails";
  if (step) msg += " at step " + std::to_string(*step);
  if (!detail.empty()) msg += ": " + detail;
  return msg;
}
}  // namespace

AssumptionError::AssumptionError(std::string assumption, std::optional<std::size_t> step,
                                 const std::string& detail)
    : Error(assumption_message(assumption, step, detail)),
      assumption_(std::move(assumption)),
      step_(step) {}

}  // namespace mshift
