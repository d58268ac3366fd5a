#pragma once

#include "json.hpp"

#include "gaegd/bench.hpp"
#include "gaegd/theory.hpp"

namespace gaegd {

using Json = nlohmann::ordered_json;

/// Field names follow the symbol table: F_star, F_bar, eta_r0, c_star, ...
Json to_json(const TheoryReport& report);

namespace bench {

Json to_json(const ExperimentSpec& spec);
/// Overlays the fields present in `j` onto `base`.
ExperimentSpec spec_from_json(const Json& j, ExperimentSpec base = {});
Json to_json(const ExperimentOutcome& outcome, const ExperimentSpec& spec);
Json to_json(const TuneResult& tune);
Json to_json(const DiagnosticsReport& report);

}  // namespace bench

}  // namespace gaegd
