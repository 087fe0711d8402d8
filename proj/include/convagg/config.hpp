#pragma once

// Experiment configuration files hold one `key = value` pair per line; text
// after '#' is ignored. Keys:
//
//   grid                    = 64:2, 64:4, 256:16     (n:M pairs)
//   problem_kind            = inside-hull | outside-hull | pure-noise
//   atoms_K                 = 512
//   replications            = 200
//   master_seed             = 0
//   solver.max_iterations   = 100000
//   solver.tolerance        = 1e-8
//   solver.tie_break        = lowest-index
//   x_levels                = 1, 2, 3
//   bound_b                 = 1
//   noise                   = 0.5
//
// Omitted keys keep their defaults.

#include <iosfwd>
#include <string>

#include "convagg/experiments.hpp"

namespace convagg::config {

experiments::ExperimentConfig parse_config(std::istream& in);
experiments::ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& out, const experiments::ExperimentConfig& cfg);

}  // namespace convagg::config
