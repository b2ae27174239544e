#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cesim/errors.hpp"

namespace cesim {

/// Absolute tolerance for every floating-point comparison in the algebra.
inline constexpr double kTolerance = 1e-9;

inline bool approx_le(double a, double b) { return a <= b + kTolerance; }
inline bool approx_ge(double a, double b) { return a + kTolerance >= b; }
inline bool approx_eq(double a, double b) { return std::abs(a - b) <= kTolerance; }

enum class AssetKind {
    Additive,       // cumulative totals (cpu cores, ram)
    Concave,        // strongest-of (latency): aggregate = max
    Convex,         // weakest-of (path bandwidth): aggregate = min
    Multiplicative, // combined probabilities (availability)
    Symbolic,       // finite label sets (access levels)
};

std::string to_string(AssetKind kind);
AssetKind asset_kind_from_string(const std::string& name);

/// Set of up to 64 symbols encoded as a bit mask. Symbol indices are
/// assigned by the owning AssetSpec's universe.
class SymbolSet {
public:
    static constexpr std::size_t kMaxSymbols = 64;

    constexpr SymbolSet() = default;
    explicit constexpr SymbolSet(std::uint64_t bits) : bits_(bits) {}

    constexpr std::uint64_t bits() const { return bits_; }
    constexpr bool contains(std::size_t index) const { return (bits_ >> index) & 1u; }
    constexpr void insert(std::size_t index) { bits_ |= (1ULL << index); }
    constexpr bool subset_of(SymbolSet other) const { return (bits_ & ~other.bits_) == 0; }
    constexpr std::size_t count() const { return static_cast<std::size_t>(__builtin_popcountll(bits_)); }

    friend constexpr SymbolSet operator&(SymbolSet a, SymbolSet b) { return SymbolSet(a.bits_ & b.bits_); }
    friend constexpr SymbolSet operator|(SymbolSet a, SymbolSet b) { return SymbolSet(a.bits_ | b.bits_); }
    friend constexpr bool operator==(SymbolSet a, SymbolSet b) { return a.bits_ == b.bits_; }

private:
    std::uint64_t bits_ = 0;
};

/// A single asset value: a scalar for the numeric kinds, a symbol set for
/// Symbolic. Units live on the spec, not the value.
using AssetValue = std::variant<double, SymbolSet>;

inline double scalar(const AssetValue& v) { return std::get<double>(v); }
inline SymbolSet symbols(const AssetValue& v) { return std::get<SymbolSet>(v); }

/// Declaration of one asset: its kind fixes the domain shape, the
/// aggregation operator and the comparison relation; lower/upper are the
/// order-theoretic bottom and top of the domain.
///
/// For Convex assets lower >= upper numerically: the bottom of the order is
/// the numerically largest value.
class AssetSpec {
public:
    AssetSpec(std::string name,
              AssetKind kind,
              AssetValue lower,
              AssetValue upper,
              std::string unit = "",
              std::optional<bool> consumable = std::nullopt,
              std::vector<std::string> universe = {});

    const std::string& name() const { return name_; }
    AssetKind kind() const { return kind_; }
    const AssetValue& lower() const { return lower_; }
    const AssetValue& upper() const { return upper_; }
    const std::string& unit() const { return unit_; }
    bool consumable() const { return consumable_; }
    const std::vector<std::string>& universe() const { return universe_; }

    bool numeric() const { return kind_ != AssetKind::Symbolic; }

    std::size_t symbol_index(const std::string& symbol) const;
    SymbolSet symbol_set(const std::vector<std::string>& names) const;
    std::vector<std::string> symbol_names(SymbolSet set) const;

    bool in_domain(const AssetValue& v) const;
    void require_in_domain(const AssetValue& v) const;

    bool operator==(const AssetSpec& other) const;

private:
    std::string name_;
    AssetKind kind_;
    AssetValue lower_;
    AssetValue upper_;
    std::string unit_;
    bool consumable_;
    std::vector<std::string> universe_;
};

/// Table of kind/aggregation/comparison rules, one value per asset kind.
AssetValue aggregate(const AssetSpec& spec, const AssetValue& a1, const AssetValue& a2);
bool compare(const AssetSpec& spec, const AssetValue& a1, const AssetValue& a2);

/// Constraint check: does capability `avail` satisfy requirement `req`?
///
/// Additive/Multiplicative/Symbolic: compare(req, avail) — the capability
/// must sit at or above the requirement in the quality order. Concave and
/// Convex requirements are tolerances/thresholds, so the operands flip:
/// compare(avail, req) — path latency within the bound, path bandwidth at
/// or above the floor.
bool satisfies(const AssetSpec& spec, const AssetValue& req, const AssetValue& avail);

/// Neutral element of `aggregate` for this spec (0, lower, lower, 1, universe).
AssetValue aggregation_identity(const AssetSpec& spec);

/// Requirement value that every capability satisfies (missing-entry default).
AssetValue vacuous_requirement(const AssetSpec& spec);

/// Draw `amount` from `capacity`. Only consumable kinds mutate the value;
/// non-consumable kinds return the capacity unchanged.
AssetValue consume(const AssetSpec& spec, const AssetValue& capacity, const AssetValue& amount);

/// Exact inverse of consume: release(consume(c, a), a) == c.
AssetValue release(const AssetSpec& spec, const AssetValue& residual, const AssetValue& amount);

/// Named collection of AssetSpecs governing a family of buckets.
class SpecSet {
public:
    SpecSet() = default;
    explicit SpecSet(std::vector<AssetSpec> specs);

    void add(AssetSpec spec);
    const AssetSpec& at(const std::string& name) const;
    const AssetSpec* find(const std::string& name) const;
    bool contains(const std::string& name) const { return specs_.count(name) > 0; }
    std::size_t size() const { return specs_.size(); }

    auto begin() const { return specs_.begin(); }
    auto end() const { return specs_.end(); }

    /// Two sets are compatible when they declare the same asset names with
    /// the same kinds; requirement sets mirror capability sets this way.
    bool compatible_with(const SpecSet& other) const;

private:
    std::map<std::string, AssetSpec> specs_;
};

using SpecSetPtr = std::shared_ptr<const SpecSet>;

/// Bucket of asset values governed by a shared spec set. Entries are
/// keyed by asset name; every key must resolve to a spec.
class Bucket {
public:
    Bucket() = default;
    explicit Bucket(SpecSetPtr specs) : specs_(std::move(specs)) {}

    const SpecSetPtr& specs() const { return specs_; }

    void set(const std::string& name, AssetValue value);
    std::optional<AssetValue> get(const std::string& name) const;

    /// Value of `name`, or the spec's bottom when absent.
    AssetValue effective(const std::string& name) const;

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool operator==(const Bucket& other) const { return entries_ == other.entries_; }

private:
    friend Bucket bucket_aggregate(const Bucket& b1, const Bucket& b2);
    friend bool bucket_compare(const Bucket& b1, const Bucket& b2);
    friend bool bucket_satisfies(const Bucket& req, const Bucket& avail);

    SpecSetPtr specs_;
    std::map<std::string, AssetValue> entries_;
};

/// Element-wise aggregation; missing entries default to the aggregation
/// identity of their spec.
Bucket bucket_aggregate(const Bucket& b1, const Bucket& b2);

/// Conjunction of element-wise compare; missing entries default to bottom.
bool bucket_compare(const Bucket& b1, const Bucket& b2);

/// Conjunction of element-wise satisfies over the union of keys; a missing
/// requirement is vacuous, a missing capability only satisfies vacuous
/// requirements.
bool bucket_satisfies(const Bucket& req, const Bucket& avail);

} // namespace cesim
