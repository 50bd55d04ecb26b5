#include "earpipe/pipeline.hpp"

#include "earpipe/error.hpp"

namespace earpipe {

std::string_view to_string(SeparationMethod m) {
  return m == SeparationMethod::Emd ? "emd" : "nnmf";
}

SeparationMethod parse_separation(std::string_view name) {
  if (name == "emd") return SeparationMethod::Emd;
  if (name == "nnmf") return SeparationMethod::Nnmf;
  throw_parameter("separation method must be 'emd' or 'nnmf', got '" + std::string(name) + "'");
}

Recording run_front_end(const Recording& raw, const PipelineConfig& cfg,
                        const FrequencyTemplate* templates) {
  Recording rec = preprocess(raw, cfg.preprocess);
  if (cfg.motion_removal) rec = denoise_recording(rec, cfg.denoise);
  if (cfg.separation == SeparationMethod::Emd) return separate_emd(rec, cfg.emd);
  require(templates != nullptr, "front end: NNMF separation needs trained templates");
  return separate_nnmf(rec, *templates);
}

}  // namespace earpipe
