#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridmga/network.hpp"

namespace gridmga {

/// Simulated-feedback evaluation functions.
enum class FunctionId : std::uint8_t {
    u1,  // specific switching actions, maximize
    u2,  // specific switching set, maximize
    u3,  // topological depth, minimize
    u4,  // cumulative overload, minimize
    u5,  // cumulative quadratic load, minimize
    u6,  // switching sequence feasibility, maximize
};

enum class Direction : std::uint8_t { maximize, minimize };

inline constexpr FunctionId kAllFunctions[] = {FunctionId::u1, FunctionId::u2, FunctionId::u3,
                                               FunctionId::u4, FunctionId::u5, FunctionId::u6};

Direction direction_of(FunctionId fn);
std::string to_string(FunctionId fn);
/// Accepts "u1".."u6" (case-insensitive); throws DomainError otherwise.
FunctionId parse_function_id(std::string_view s);

/// What U2 compares S_spec entries against.
enum class SetTarget : std::uint8_t {
    zero,           // indicator of z_j = 0 for all j in S_spec
    match_optimum,  // indicator of z_j equal to the least-cost topology's value
};

struct EvalContext {
    std::vector<std::size_t> j_spec;
    std::vector<std::size_t> s_spec;
    SetTarget s_target = SetTarget::zero;
    /// Per-entry target when s_target == match_optimum (aligned with s_spec).
    std::vector<std::uint8_t> s_values;
    Topology base;
    double overload_threshold = 0.9;

    /// Target value for the k-th entry of s_spec.
    std::uint8_t target_for(std::size_t k) const {
        return s_target == SetTarget::zero ? 0 : s_values.at(k);
    }
};

}  // namespace gridmga
