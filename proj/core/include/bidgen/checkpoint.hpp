#pragma once

#include <optional>
#include <string>

#include "bidgen/conditions.hpp"
#include "bidgen/denoiser.hpp"
#include "bidgen/invdyn.hpp"
#include "bidgen/sampler.hpp"
#include "bidgen/schedule.hpp"
#include "bidgen/types.hpp"

namespace bidgen {

/// Everything needed to run the generative policy: denoiser weights and
/// schedule, inverse-dynamics weights, sampler defaults, the frozen
/// condition context and the feature statistics used at training time.
/// Components carry the condition-layout hash; mixing checkpoints trained
/// against different layouts is rejected.
struct PolicyBundle {
  std::optional<DenoiserParams> denoiser;
  std::optional<NoiseSchedule> schedule;
  std::optional<InvDynParams> invdyn;
  SamplerConfig sampler;
  ConditionContext conditions;
  FeatureStats feature_stats;

  void require_generation() const;  // denoiser + schedule + invdyn present
};

/// Binary container: magic 'BGCP', u32 format version, tagged sections
/// (4-byte tag, u64 length, payload), and a trailing FNV-1a checksum over
/// everything before it. The denoiser section holds its config block, the
/// schedule block, then the little-endian 64-bit parameter array in
/// declaration order. Distinct errors: version_mismatch, truncated_file,
/// checksum_failure, layout_mismatch.
void save_bundle(const PolicyBundle& bundle, const std::string& path);
PolicyBundle load_bundle(const std::string& path);

/// Merges the inverse-dynamics section of `other` into `dst` (layout hashes
/// must agree).
void merge_invdyn(PolicyBundle& dst, const PolicyBundle& other);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace bidgen
