#ifndef ODENSEMBLE_BATCH_HPP
#define ODENSEMBLE_BATCH_HPP

#include <span>
#include <vector>

#include "odensemble/driver.hpp"
#include "odensemble/pool.hpp"
#include "odensemble/types.hpp"

namespace odensemble {

/// The chunk of systems the engine integrates in one parallel pass. Uses the
/// same structure-of-arrays layout as ProblemPool with stride N_T; results
/// are written back in place, so after solve() the arrays hold endpoints and
/// the outcomes record how each system terminated.
class SolverBatch {
public:
    explicit SolverBatch(const BatchDims& dims);

    const BatchDims& dims() const { return dims_; }
    Index size() const { return dims_.batch_capacity; }

    std::span<Real> time_domain() { return time_domain_; }
    std::span<Real> state() { return state_; }
    std::span<Real> parameters() { return parameters_; }
    std::span<Real> accessories() { return accessories_; }
    std::span<const Real> time_domain() const { return time_domain_; }
    std::span<const Real> state() const { return state_; }
    std::span<const Real> parameters() const { return parameters_; }
    std::span<const Real> accessories() const { return accessories_; }

    std::span<SystemOutcome> outcomes() { return outcomes_; }
    std::span<const SystemOutcome> outcomes() const { return outcomes_; }

    Real time_start(Index idx) const { return time_domain_[static_cast<std::size_t>(flat_index(idx, 0, size()))]; }
    Real time_end(Index idx) const { return time_domain_[static_cast<std::size_t>(flat_index(idx, 1, size()))]; }
    Real state_at(Index idx, Index component) const {
        return state_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }
    Real param_at(Index idx, Index component) const {
        return parameters_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }
    Real accessory_at(Index idx, Index component) const {
        return accessories_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }

    /// Gather one system's slices into contiguous buffers / scatter them back.
    /// The hot loop works on contiguous data; the batch stays SoA.
    void gather_system(Index idx, std::span<Real> td, std::span<Real> y, std::span<Real> p,
                       std::span<Real> acc) const;
    void scatter_system(Index idx, std::span<const Real> td, std::span<const Real> y,
                        std::span<const Real> acc);

    void reset_outcomes();

private:
    friend void linear_set(SolverBatch&, const ProblemPool&, const LinearCopySpec&);
    friend void random_set(SolverBatch&, const ProblemPool&, const RandomCopySpec&);

    BatchDims dims_;
    std::vector<Real> time_domain_;
    std::vector<Real> state_;
    std::vector<Real> parameters_;
    std::vector<Real> accessories_;
    std::vector<SystemOutcome> outcomes_;
};

/// Copies a consecutive run of systems from the pool into the batch.
/// Only the property arrays selected by copy_mode are touched; systems
/// outside the target range are left alone. Fresh systems get fresh outcomes.
void linear_set(SolverBatch& batch, const ProblemPool& pool, const LinearCopySpec& spec);

/// Copies systems scattered in the pool into the given batch slots,
/// batch[indices_in_batch[j]] = pool[indices_in_pool[j]]. Pool indices may
/// repeat; batch indices must not.
void random_set(SolverBatch& batch, const ProblemPool& pool, const RandomCopySpec& spec);

} // namespace odensemble

#endif
