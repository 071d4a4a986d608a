#pragma once

// Versioned plain-text persistence for fitted states, network weights and
// run reports. Reals are written with 17 significant digits, so every file
// reloads to bit-identical values.
//
// DPM state ("dms-dpm 1"):
//   T d N
//   omega0 a0 b0 m0 lambda0
//   iterations converged stick_clamp_events precision_floor_events
//   prior_mean (d values)
//   means (T rows of d), precisions (T rows of d)
//   sticks (T values), active (T 0/1 flags), assignments (N indices)
//
// GMM state ("dms-gmm 1"):
//   K d N
//   iterations converged
//   means (K rows), precisions (K rows), weights, active, assignments
//
// Network ("dms-net 1"):
//   L                                   number of layers
//   per layer: role in out activation   role is enc, mean, logvar or dec
//              out rows of in weights, then one row of out biases

#include <iosfwd>
#include <string>

#include "dms/dpm.hpp"
#include "dms/eval.hpp"
#include "dms/gmm.hpp"
#include "dms/latent_net.hpp"
#include "dms/trainer.hpp"

namespace dms {

std::string serialize_dpm(const DpmState& state);
DpmState parse_dpm(const std::string& text);

std::string serialize_gmm(const GmmState& state);
GmmState parse_gmm(const std::string& text);

std::string serialize_net(const LatentNet& net);
LatentNet parse_net(const std::string& text);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

/// One metric per line: "phase epoch metric value". Timings are wall-clock
/// and only written when asked for.
void write_train_report(std::ostream& out, const TrainReport& report, bool include_timings = false);

/// "k_hat", "sizes" and, when labels are known, "acc" lines.
void write_fit_report(std::ostream& out, const std::string& method, const KReport& k,
                      const double* accuracy, int iterations, bool converged);

std::string format_real(double v);

}  // namespace dms
