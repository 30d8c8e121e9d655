#ifndef PASSAUTH_CHECKPOINT_HPP
#define PASSAUTH_CHECKPOINT_HPP

#include <string>

#include "passauth/lstm.hpp"

namespace passauth::neuralnet {

// Binary checkpoint: magic, format version, widths, margin, then all
// parameters as 64-bit little-endian doubles in the flatten_params order
// (layer 1 then layer 2; gates i, f, o, g; W, U, b). Round trips bit-exactly.
void save_checkpoint(const SiameseModel& model, const std::string& path);
SiameseModel load_checkpoint(const std::string& path);

}  // namespace passauth::neuralnet

#endif
