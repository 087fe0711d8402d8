#pragma once

// CSV layouts (one entity per file, header row first, '#' lines are comments):
//
//   problem      # bound_b = <b>
//                x,y,prob
//   dictionary   x,f0,f1,...,f{M-1}      one row per design index
//   samples      # seed = <seed>
//                x,y
//   weights      j,weight
//
// Doubles are written with 17 significant digits so files round-trip exactly.

#include <iosfwd>
#include <string>
#include <vector>

#include "convagg/model.hpp"

namespace convagg::io {

std::string format_double(double v);

void write_problem(std::ostream& os, const DiscreteProblem& p);
DiscreteProblem read_problem(std::istream& is);

void write_dictionary(std::ostream& os, const Dictionary& dict);
Dictionary read_dictionary(std::istream& is);

void write_samples(std::ostream& os, const SampleSet& s);
SampleSet read_samples(std::istream& is);

void write_weights(std::ostream& os, const std::vector<double>& w);
std::vector<double> read_weights(std::istream& is);

DiscreteProblem load_problem(const std::string& path);
Dictionary load_dictionary(const std::string& path);
SampleSet load_samples(const std::string& path);
std::vector<double> load_weights(const std::string& path);

void save(const std::string& path, const DiscreteProblem& p);
void save(const std::string& path, const Dictionary& d);
void save(const std::string& path, const SampleSet& s);
/// Weights file.
void save(const std::string& path, const std::vector<double>& w);

}  // namespace convagg::io
