#include "odensemble/batch.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace odensemble {

SolverBatch::SolverBatch(const BatchDims& dims)
    : dims_(dims),
      time_domain_(static_cast<std::size_t>(2 * dims.batch_capacity), Real{0}),
      state_(static_cast<std::size_t>(dims.system_dim * dims.batch_capacity), Real{0}),
      parameters_(static_cast<std::size_t>(dims.param_count * dims.batch_capacity), Real{0}),
      accessories_(static_cast<std::size_t>(dims.accessory_count * dims.batch_capacity), Real{0}),
      outcomes_(static_cast<std::size_t>(dims.batch_capacity)) {
    dims.validate();
}

void SolverBatch::gather_system(Index idx, std::span<Real> td, std::span<Real> y, std::span<Real> p,
                                std::span<Real> acc) const {
    const Index n = size();
    for (Index c = 0; c < 2; ++c) td[static_cast<std::size_t>(c)] = time_domain_[static_cast<std::size_t>(idx + c * n)];
    for (Index c = 0; c < dims_.system_dim; ++c)
        y[static_cast<std::size_t>(c)] = state_[static_cast<std::size_t>(idx + c * n)];
    for (Index c = 0; c < dims_.param_count; ++c)
        p[static_cast<std::size_t>(c)] = parameters_[static_cast<std::size_t>(idx + c * n)];
    for (Index c = 0; c < dims_.accessory_count; ++c)
        acc[static_cast<std::size_t>(c)] = accessories_[static_cast<std::size_t>(idx + c * n)];
}

void SolverBatch::scatter_system(Index idx, std::span<const Real> td, std::span<const Real> y,
                                 std::span<const Real> acc) {
    const Index n = size();
    for (Index c = 0; c < 2; ++c) time_domain_[static_cast<std::size_t>(idx + c * n)] = td[static_cast<std::size_t>(c)];
    for (Index c = 0; c < dims_.system_dim; ++c)
        state_[static_cast<std::size_t>(idx + c * n)] = y[static_cast<std::size_t>(c)];
    for (Index c = 0; c < dims_.accessory_count; ++c)
        accessories_[static_cast<std::size_t>(idx + c * n)] = acc[static_cast<std::size_t>(c)];
}

void SolverBatch::reset_outcomes() {
    std::fill(outcomes_.begin(), outcomes_.end(), SystemOutcome{});
}

namespace {

void check_dims_agree(const BatchDims& b, const PoolDims& p) {
    if (b.system_dim != p.system_dim || b.param_count != p.param_count ||
        b.accessory_count != p.accessory_count)
        throw std::invalid_argument("copy: batch and pool disagree on per-system dimensions");
}

// Copies `count` systems of one property array, component by component.
void copy_property(std::span<Real> dst, Index dst_stride, Index dst_start,
                   std::span<const Real> src, Index src_stride, Index src_start, Index count,
                   Index components) {
    for (Index c = 0; c < components; ++c) {
        const auto d0 = static_cast<std::size_t>(dst_start + c * dst_stride);
        const auto s0 = static_cast<std::size_t>(src_start + c * src_stride);
        std::copy_n(src.begin() + s0, static_cast<std::size_t>(count), dst.begin() + d0);
    }
}

void copy_scattered(std::span<Real> dst, Index dst_stride, std::span<const Index> dst_idx,
                    std::span<const Real> src, Index src_stride, std::span<const Index> src_idx,
                    Index components) {
    for (Index c = 0; c < components; ++c)
        for (std::size_t j = 0; j < dst_idx.size(); ++j)
            dst[static_cast<std::size_t>(dst_idx[j] + c * dst_stride)] =
                src[static_cast<std::size_t>(src_idx[j] + c * src_stride)];
}

bool wants(CopyMode mode, CopyMode which) { return mode == which || mode == CopyMode::All; }

} // namespace

void linear_set(SolverBatch& batch, const ProblemPool& pool, const LinearCopySpec& spec) {
    check_dims_agree(batch.dims(), pool.dims());
    if (spec.element_count < 0 || spec.start_in_batch < 0 || spec.start_in_pool < 0)
        throw std::out_of_range("linear_set: negative index or count");
    if (spec.start_in_batch + spec.element_count > batch.size())
        throw std::out_of_range("linear_set: range exceeds batch capacity");
    if (spec.start_in_pool + spec.element_count > pool.size())
        throw std::out_of_range("linear_set: range exceeds pool size");

    const Index nb = batch.size(), np = pool.size(), n = spec.element_count;
    const BatchDims& d = batch.dims();
    if (wants(spec.copy_mode, CopyMode::TimeDomain))
        copy_property(batch.time_domain_, nb, spec.start_in_batch, pool.time_domain(), np,
                      spec.start_in_pool, n, 2);
    if (wants(spec.copy_mode, CopyMode::ActualState))
        copy_property(batch.state_, nb, spec.start_in_batch, pool.state(), np, spec.start_in_pool, n,
                      d.system_dim);
    if (wants(spec.copy_mode, CopyMode::Parameter))
        copy_property(batch.parameters_, nb, spec.start_in_batch, pool.parameters(), np,
                      spec.start_in_pool, n, d.param_count);
    if (wants(spec.copy_mode, CopyMode::Accessories))
        copy_property(batch.accessories_, nb, spec.start_in_batch, pool.accessories(), np,
                      spec.start_in_pool, n, d.accessory_count);

    for (Index i = 0; i < n; ++i)
        batch.outcomes_[static_cast<std::size_t>(spec.start_in_batch + i)] = SystemOutcome{};
}

void random_set(SolverBatch& batch, const ProblemPool& pool, const RandomCopySpec& spec) {
    check_dims_agree(batch.dims(), pool.dims());
    if (spec.indices_in_batch.size() != spec.indices_in_pool.size())
        throw std::invalid_argument("random_set: index lists differ in length");
    std::unordered_set<Index> seen;
    for (Index i : spec.indices_in_batch) {
        if (i < 0 || i >= batch.size()) throw std::out_of_range("random_set: batch index out of range");
        if (!seen.insert(i).second)
            throw std::invalid_argument("random_set: duplicate batch index " + std::to_string(i));
    }
    for (Index i : spec.indices_in_pool)
        if (i < 0 || i >= pool.size()) throw std::out_of_range("random_set: pool index out of range");

    const Index nb = batch.size(), np = pool.size();
    const BatchDims& d = batch.dims();
    if (wants(spec.copy_mode, CopyMode::TimeDomain))
        copy_scattered(batch.time_domain_, nb, spec.indices_in_batch, pool.time_domain(), np,
                       spec.indices_in_pool, 2);
    if (wants(spec.copy_mode, CopyMode::ActualState))
        copy_scattered(batch.state_, nb, spec.indices_in_batch, pool.state(), np, spec.indices_in_pool,
                       d.system_dim);
    if (wants(spec.copy_mode, CopyMode::Parameter))
        copy_scattered(batch.parameters_, nb, spec.indices_in_batch, pool.parameters(), np,
                       spec.indices_in_pool, d.param_count);
    if (wants(spec.copy_mode, CopyMode::Accessories))
        copy_scattered(batch.accessories_, nb, spec.indices_in_batch, pool.accessories(), np,
                       spec.indices_in_pool, d.accessory_count);

    for (Index i : spec.indices_in_batch) batch.outcomes_[static_cast<std::size_t>(i)] = SystemOutcome{};
}

} // namespace odensemble
