#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>

#include "memesn/esn.hpp"
#include "memesn/learning.hpp"

namespace memesn {

/// Resumable run state: reservoir state, readout weights, trainer
/// accumulators and, in hardware mode, every device state, hold and noise
/// stream of the fabric.
///
/// Text container, one record per line:
///
///     # memesn-checkpoint v1
///     next_step <t>
///     network <mode> <n_u> <n_r> <n_o> <seed>
///     vector <name> <n> <values...>
///     matrix <name> <rows> <cols> <row-major values...>
///     trainer <count> <theta> <shadow_count>
///     crossbar <name> <rows> <cols> <structure>
///     noise <rng state>
///     cell <i> <j> <pruned> <next_minus> <plus device> [<minus device>]
///     holds <name> <n> <stored values...>
///     end
///
/// A device is `w switch_count endurance_limit fault frozen_g events`.
/// Device parameters are not stored: they are re-derived from the network
/// seed, so a checkpoint restores into a network built from the same
/// configuration.
void save_checkpoint(std::ostream& out, const EchoStateNetwork& net, const OnlineTrainer* trainer,
                     std::size_t next_step);
void save_checkpoint(const std::filesystem::path& path, const EchoStateNetwork& net,
                     const OnlineTrainer* trainer, std::size_t next_step);

/// Restores into `net` (and `trainer` when given) and returns next_step.
/// Throws DataError on malformed input or a network mismatch.
std::size_t load_checkpoint(std::istream& in, EchoStateNetwork& net, OnlineTrainer* trainer);
std::size_t load_checkpoint(const std::filesystem::path& path, EchoStateNetwork& net,
                            OnlineTrainer* trainer);

}  // namespace memesn
