#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsurgery/dataset.hpp"
#include "gsurgery/estimation.hpp"
#include "gsurgery/identify.hpp"

namespace gsurgery {

/// True when every selection vertex is m-separated from y once the edges
/// into x are cut.
bool is_stable(const Admg& g, const VarSet& x, const VarSet& y);

/// Conditioning sets Z ⊆ O \ {t} that separate t from every selection
/// vertex, largest first, then lexicographic.
std::vector<VarSet> pruning_search(const Admg& g, const std::string& t);

enum class Branch { Plain, TargetMutilated };
enum class CandidateStatus { Identified, NotIdentified, Skipped, FitFailed };

std::string to_string(Branch b);
std::string to_string(CandidateStatus s);

/// One (conditioning set, branch) cell of the search.
struct CandidateReport {
    VarSet conditioning;
    Branch branch = Branch::Plain;
    /// Post-reduction query; for the target-mutilated branch t has already
    /// been moved into the intervention set.
    VarSet intervene;
    VarSet outcome;
    CandidateStatus status = CandidateStatus::NotIdentified;
    /// Identified expression normalized over the target.
    ExprPtr expr;
    std::optional<double> loss;
    std::string detail;
};

struct SearchOptions {
    /// Largest conditioning set tried; unset means the whole power set.
    std::optional<std::size_t> max_conditioning_size;
};

/// The symbolic half of the search: every (Z, branch) cell with its
/// identification outcome, in enumeration order (Z by bitmask over the
/// sorted candidate pool, plain branch first).
std::vector<CandidateReport> enumerate_candidates(const Admg& g, const VarSet& mutable_vars, const std::string& t,
                                                  const SearchOptions& options = {});

struct SurgeryOptions {
    SearchOptions search;
    FitOptions fit;
};

struct SurgeryCandidate {
    CandidateReport report;
    Predictor predictor;
};

struct SurgeryResult {
    std::string target;
    VarSet mutable_vars;
    std::vector<CandidateReport> report;
    std::vector<SurgeryCandidate> candidates;
    std::optional<std::size_t> chosen;  // index into candidates
    std::string failure;

    bool success() const { return chosen.has_value(); }
    const SurgeryCandidate& best() const { return candidates.at(*chosen); }
};

/// Fits every identified candidate on `train`, scores it on `valid`, and
/// keeps the lowest loss. Ties prefer the larger conditioning set, then the
/// lexicographically smaller expression key.
SurgeryResult surgery_search(const Admg& g, const VarSet& mutable_vars, const std::string& t, const Dataset& train,
                             const Dataset& valid, const SurgeryOptions& options = {});

nlohmann::json report_json(const SurgeryResult& r, const VarOrder& order = {});

}  // namespace gsurgery
