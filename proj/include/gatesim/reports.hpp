#pragma once
// Artifact serialization.  Addresses are 16-digit lowercase hex; times are
// seconds with one decimal.

#include <string>
#include <vector>

#include "json.hpp"

#include "gatesim/layout.hpp"
#include "gatesim/mitigation.hpp"
#include "gatesim/search.hpp"
#include "gatesim/timing.hpp"

namespace gatesim {

using ojson = nlohmann::ordered_json;

inline double round1(double x) { return std::round(x * 10.0) / 10.0; }

ojson layout_json(const AddressSpaceLayout& lay);
std::string layout_text(const AddressSpaceLayout& lay);

// "address,sample_index,cycles" rows for each address in order.
std::string probe_csv(const TimingConfig& cfg, const AddressSpaceLayout& lay,
                      const std::vector<uint64_t>& addrs, uint32_t n_samples);

ojson search_json(const SearchReport& rep);
// "address,statistic,class" rows (requires collect_candidates).
std::string candidates_csv(const SearchReport& rep);

ojson exploit_json(const EvalResult& R);

// "umip,dte,vmm_policy,kaiser,dual_gdt,seed,address_found,sgdt_truth,
//  exploit_success,failing_step"
std::string matrix_csv(const std::vector<AttackOutcome>& rows);

}  // namespace gatesim
