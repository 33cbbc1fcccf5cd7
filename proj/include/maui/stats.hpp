#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace maui {

enum class Alternative { kGreater, kLess };
enum class MwMethod { kAuto, kExact, kApprox };

struct MwResult {
  double u = 0.0;  // midrank-based U statistic of the first sample
  double p = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool degenerate = false;  // every pooled value identical
  MwMethod method = MwMethod::kAuto;  // method actually applied
};

// One-sided Mann-Whitney U. kAuto enumerates the exact null distribution
// when n1 + n2 <= 20 and otherwise uses the normal approximation with
// tie-corrected variance and continuity correction. Explicit kExact is
// capped at 25 pooled values. All-identical pooled values short-circuit to
// p = 1 with the degenerate flag set.
MwResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                        Alternative alternative,
                        MwMethod method = MwMethod::kAuto);

struct MrrGroups {
  std::vector<std::string> high;    // top n by MRR
  std::vector<std::string> low;     // bottom n by MRR
  std::vector<std::string> random;  // n sampled from everyone; may overlap
};

// Sorts authors by (MRR, id) ascending and takes the two ends, so equal
// MRRs still give a deterministic, disjoint high/low pair. Requires at
// least 2n authors.
MrrGroups select_mrr_groups(const std::map<std::string, double>& mrr,
                            std::size_t n, std::uint64_t seed);

struct HypothesisResult {
  std::string id;
  Alternative alternative;
  MwResult mw;
  bool reject = false;  // p < alpha
};

// The three planned comparisons of centroid distance:
//   high_vs_low     high-MRR authors sit farther out     (greater)
//   high_vs_random  high-MRR farther than a random draw  (greater)
//   low_vs_random   low-MRR closer than a random draw    (less)
std::vector<HypothesisResult> run_hypotheses(
    const MrrGroups& groups,
    const std::map<std::string, double>& distance_by_author, double alpha,
    MwMethod method = MwMethod::kAuto);

}  // namespace maui
