#ifndef ODENSEMBLE_POOL_HPP
#define ODENSEMBLE_POOL_HPP

#include <span>
#include <stdexcept>
#include <vector>

#include "odensemble/types.hpp"

namespace odensemble {

/// Flat offset of component `component` of system `idx` in an array that
/// stores `count` systems component-contiguously (structure of arrays).
/// Component i of system idx lives at idx + i*count, so the values of one
/// component for consecutive systems are adjacent in memory.
inline Index flat_index(Index idx, Index component, Index count) {
    if (idx < 0 || idx >= count)
        throw std::out_of_range("flat_index: system index " + std::to_string(idx) +
                                " outside [0, " + std::to_string(count) + ")");
    if (component < 0)
        throw std::out_of_range("flat_index: negative component index");
    return idx + component * count;
}

/// Shape of a problem pool: how many systems it holds and how wide each is.
struct PoolDims {
    Index problem_size = 0;    // N_P, number of independent systems
    Index system_dim = 0;      // N_sys, state components per system
    Index param_count = 0;     // N_par
    Index accessory_count = 0; // N_A

    void validate() const {
        if (problem_size < 1) throw std::invalid_argument("PoolDims: problem_size must be >= 1");
        if (system_dim < 1) throw std::invalid_argument("PoolDims: system_dim must be >= 1");
        if (param_count < 0) throw std::invalid_argument("PoolDims: param_count must be >= 0");
        if (accessory_count < 0) throw std::invalid_argument("PoolDims: accessory_count must be >= 0");
    }
};

/// Shape of one solver batch (the chunk of systems solved in one pass).
struct BatchDims {
    Index batch_capacity = 0; // N_T, systems resident in the batch
    Index system_dim = 0;
    Index param_count = 0;
    Index event_count = 0; // N_E
    Index accessory_count = 0;

    void validate() const {
        if (batch_capacity < 1) throw std::invalid_argument("BatchDims: batch_capacity must be >= 1");
        if (system_dim < 1) throw std::invalid_argument("BatchDims: system_dim must be >= 1");
        if (param_count < 0) throw std::invalid_argument("BatchDims: param_count must be >= 0");
        if (event_count < 0) throw std::invalid_argument("BatchDims: event_count must be >= 0");
        if (accessory_count < 0) throw std::invalid_argument("BatchDims: accessory_count must be >= 0");
    }
};

/// Per-system widths a system definition prescribes; the batch adds capacity.
struct SystemDims {
    Index system_dim = 0;
    Index param_count = 0;
    Index event_count = 0;
    Index accessory_count = 0;
};

inline BatchDims make_batch_dims(Index capacity, const SystemDims& sys) {
    BatchDims d{capacity, sys.system_dim, sys.param_count, sys.event_count, sys.accessory_count};
    d.validate();
    return d;
}

/// Host-side storage of all independent initial value problems, kept in
/// structure-of-arrays layout (see flat_index). Accessory slots are always
/// allocated, even if a given system definition leaves them unused.
class ProblemPool {
public:
    explicit ProblemPool(const PoolDims& dims)
        : dims_(dims),
          time_domain_(static_cast<std::size_t>(2 * dims.problem_size), Real{0}),
          state_(static_cast<std::size_t>(dims.system_dim * dims.problem_size), Real{0}),
          parameters_(static_cast<std::size_t>(dims.param_count * dims.problem_size), Real{0}),
          accessories_(static_cast<std::size_t>(dims.accessory_count * dims.problem_size), Real{0}) {
        dims.validate();
    }

    const PoolDims& dims() const { return dims_; }
    Index size() const { return dims_.problem_size; }

    std::span<Real> time_domain() { return time_domain_; }
    std::span<Real> state() { return state_; }
    std::span<Real> parameters() { return parameters_; }
    std::span<Real> accessories() { return accessories_; }
    std::span<const Real> time_domain() const { return time_domain_; }
    std::span<const Real> state() const { return state_; }
    std::span<const Real> parameters() const { return parameters_; }
    std::span<const Real> accessories() const { return accessories_; }

    // Element accessors; all bounds-checked through flat_index.
    Real& time_start(Index idx) { return time_domain_[static_cast<std::size_t>(flat_index(idx, 0, size()))]; }
    Real& time_end(Index idx) { return time_domain_[static_cast<std::size_t>(flat_index(idx, 1, size()))]; }
    Real time_start(Index idx) const { return time_domain_[static_cast<std::size_t>(flat_index(idx, 0, size()))]; }
    Real time_end(Index idx) const { return time_domain_[static_cast<std::size_t>(flat_index(idx, 1, size()))]; }

    Real& state_at(Index idx, Index component) {
        check_component(component, dims_.system_dim, "state");
        return state_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }
    Real state_at(Index idx, Index component) const {
        check_component(component, dims_.system_dim, "state");
        return state_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }
    Real& param_at(Index idx, Index component) {
        check_component(component, dims_.param_count, "parameter");
        return parameters_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }
    Real param_at(Index idx, Index component) const {
        check_component(component, dims_.param_count, "parameter");
        return parameters_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }
    Real& accessory_at(Index idx, Index component) {
        check_component(component, dims_.accessory_count, "accessory");
        return accessories_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }
    Real accessory_at(Index idx, Index component) const {
        check_component(component, dims_.accessory_count, "accessory");
        return accessories_[static_cast<std::size_t>(flat_index(idx, component, size()))];
    }

private:
    static void check_component(Index component, Index count, const char* what) {
        if (component < 0 || component >= count)
            throw std::out_of_range(std::string("ProblemPool: ") + what + " component out of range");
    }

    PoolDims dims_;
    std::vector<Real> time_domain_;
    std::vector<Real> state_;
    std::vector<Real> parameters_;
    std::vector<Real> accessories_;
};

/// Which property arrays a pool-to-batch copy touches.
enum class CopyMode { TimeDomain, ActualState, Parameter, Accessories, All };

/// Copy of `element_count` consecutive systems.
struct LinearCopySpec {
    Index start_in_batch = 0;
    Index start_in_pool = 0;
    Index element_count = 0;
    CopyMode copy_mode = CopyMode::All;
};

/// Copy of systems scattered in the pool. Pool indices may repeat (fan-out);
/// batch indices must be unique so no destination slot is written twice.
struct RandomCopySpec {
    std::vector<Index> indices_in_batch;
    std::vector<Index> indices_in_pool;
    CopyMode copy_mode = CopyMode::All;
};

} // namespace odensemble

#endif
