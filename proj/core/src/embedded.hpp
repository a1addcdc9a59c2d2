#pragma once

// Data files compiled into the library (generated from core/data and core/schema).

namespace cvqkd::detail {

const char* embedded_turbulence_table();
const char* embedded_scenario_schema();

}  // namespace cvqkd::detail
