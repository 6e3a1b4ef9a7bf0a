#pragma once

#include <cstdint>
#include <string>

namespace streamrec {

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::uint64_t checks = 0;
    /// First counterexample when the suite fails.
    std::string detail;
};

/// Candidate-list enumeration for every n_i in {1,2,3,4,6}, w in {0,1,2} and
/// (user, item) in [0,256)^2, compared with the grid router.
SuiteResult validate_routing();

/// Randomized (U, I, eta, lambda) instances against a closed-form update.
SuiteResult validate_isgd(std::uint64_t seed = 1, std::uint64_t instances = 10000);

/// Incremental similarities against batch cosine recomputed from the prefix
/// every `check_every` events. `fault_offset` perturbs every similarity the
/// model reports, to demonstrate the oracle catches it.
SuiteResult validate_similarity(std::uint64_t seed = 1, std::uint64_t events = 5000,
                                std::uint64_t check_every = 500, double fault_offset = 0.0);

}  // namespace streamrec
