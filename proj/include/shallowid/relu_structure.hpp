#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "shallowid/net.hpp"
#include "shallowid/tolerance.hpp"

namespace shallowid {

/// Admissibility of a ReLU network (zero neurons, positive-scale duplicates).
AdmissibilityReport check_admissible(const ShallowNet& net, const ToleranceConfig& tol);

enum class ReductionCase { k1_eq_1, k1_eq_2, k1_ge_3, cancellation };

std::string_view to_string(ReductionCase c);

/// Index into either the K1 or the K2 list of a GroupedReLU.
struct TermRef {
  bool in_k1 = false;
  std::size_t index = 0;

  friend bool operator==(const TermRef&, const TermRef&) = default;
};

/// Evidence that a grouped network can be rewritten with fewer neurons.
///
/// epsilon and i_index are indexed like GroupedReLU::k1; i_index[k] is 1 when
/// epsilon[k] = +1 and 2 otherwise. `cancelled` lists the K1 entries with
/// s1 + s2 = 0 (cancellation case only).
struct ReductionWitness {
  ReductionCase kind = ReductionCase::k1_ge_3;
  std::vector<int> epsilon;
  std::vector<int> i_index;
  std::vector<std::size_t> k2_prime;
  std::optional<TermRef> k0;
  std::optional<double> c0;
  std::vector<std::size_t> cancelled;
};

/// Decides reducibility of an admissible grouped ReLU network.
///
/// Search order: cancellation pre-pass, #K1 >= 3, #K1 = 1 (epsilon x subsets of K2),
/// #K1 = 2 (epsilon pairs x subsets of K2 x k0 with c0 by least squares). The
/// subset enumeration is exponential in #K2; #K2 > 24 is rejected with Error(size).
std::optional<ReductionWitness> test_reducible(const GroupedReLU& g, const ToleranceConfig& tol);

/// Applies the rewrite certified by `w`. The result has strictly fewer neurons and
/// the same function. Throws Error(invariant) if `w` does not certify `g`.
GroupedReLU reduce_once(const GroupedReLU& g, const ReductionWitness& w, const ToleranceConfig& tol);

/// Repeats group / test_reducible / reduce_once until no witness remains.
/// Returns `net` itself when it is already irreducible.
ShallowNet reduce_fully(const ShallowNet& net, const ToleranceConfig& tol);

/// Witness that two ReLU networks with mutually distinct hyperplanes are equivalent:
/// epsilon_k * lambda_k * (a_k, b_k) = (a'_pi(k), b'_pi(k)), s_k / lambda_k = s'_pi(k),
/// sum_{k in K} s_k a_k = 0 and c' - c = sum_{k in K} s_k b_k.
struct EquivalenceCertificate {
  std::vector<std::size_t> permutation;
  std::vector<int> epsilon;
  std::vector<double> lambda;
  std::vector<std::size_t> flipped;  // K = {k : epsilon_k = -1}
  double constant_shift = 0.0;
};

/// Returns a certificate iff the two networks compute the same function.
///
/// Both networks must be admissible ReLU networks whose hyperplanes are mutually
/// distinct; otherwise Error(hypothesis) is thrown and no answer is given.
std::optional<EquivalenceCertificate> test_equivalent(const ShallowNet& n1, const ShallowNet& n2,
                                                      const ToleranceConfig& tol);

/// Re-checks every certificate identity against the two networks.
bool certificate_holds(const EquivalenceCertificate& cert, const ShallowNet& n1, const ShallowNet& n2,
                       const ToleranceConfig& tol);

}  // namespace shallowid
