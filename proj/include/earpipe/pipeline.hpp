#pragma once

#include <optional>
#include <string_view>

#include "earpipe/emd.hpp"
#include "earpipe/nnmf.hpp"
#include "earpipe/preprocess.hpp"
#include "earpipe/recording.hpp"
#include "earpipe/vmd.hpp"

namespace earpipe {

enum class SeparationMethod { Emd, Nnmf };

std::string_view to_string(SeparationMethod m);
SeparationMethod parse_separation(std::string_view name);

struct PipelineConfig {
  PreprocessConfig preprocess;  // preprocess.bandpass doubles as the [1 30] Hz baseline toggle
  bool motion_removal = true;
  DenoiseConfig denoise;
  SeparationMethod separation = SeparationMethod::Nnmf;
  EmdConfig emd;
};

// preprocess -> optional VMD motion removal -> EMD or NNMF separation. NNMF
// needs templates.
Recording run_front_end(const Recording& raw, const PipelineConfig& cfg,
                        const FrequencyTemplate* templates);

}  // namespace earpipe
