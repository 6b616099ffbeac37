#pragma once

// Flat `key = value` configuration files for experiments.
//
// One assignment per line; `#` starts a comment. Lists are comma separated.
// Unknown or repeated keys are rejected with the offending line number.
//
//   task = lorenz            # lorenz | rossler
//   kind = opto              # opto | tanh | polyode
//   m1 = 2, 5, 10, 20, 50, 100, 200
//   m2 = 200
//   tau_max = 10             # delay periods
//   realizations = 20
//   n_train = 8000
//   n_test = 4000
//   transient = 1000         # driver steps discarded
//   reservoir_transient = 200
//   ridge = 1e-8             # relative to max diag(Omega^T Omega)
//   seed = 1
//   opto.tl = 200
//   opto.beta = 0.5
//   opto.rho = 1
//   opto.phi = pi/4          # number, `pi`, or `pi/<number>`
//   opto.theta = 50
//   augment_squares = auto   # auto | true | false
//   compute_mc = true
//   mc_length = 4000
//   mc_kmax = 50
//   scatter.sizes = 50, 100
//   scatter.count = 100
//   scatter.bin_width = 10
//   protocol.drive = 8000
//   protocol.reset = 100
//   protocol.test = 4000

#include "shiftres/experiment.hpp"

#include <iosfwd>
#include <string>

namespace shiftres {

/// Parses a config, starting from the defaults. Throws ConfigError.
SweepConfig parse_config(std::istream& is);
SweepConfig parse_config_text(const std::string& text);
SweepConfig load_config(const std::string& path);

/// Canonical text form; parse_config_text(to_config_text(c)) reproduces c.
std::string to_config_text(const SweepConfig& cfg, bool include_seed = true);

} // namespace shiftres
