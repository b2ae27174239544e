#include "cesim/assets.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cesim {

std::string to_string(AssetKind kind) {
    switch (kind) {
    case AssetKind::Additive: return "additive";
    case AssetKind::Concave: return "concave";
    case AssetKind::Convex: return "convex";
    case AssetKind::Multiplicative: return "multiplicative";
    case AssetKind::Symbolic: return "symbolic";
    }
    return "?";
}

AssetKind asset_kind_from_string(const std::string& name) {
    if (name == "additive") return AssetKind::Additive;
    if (name == "concave") return AssetKind::Concave;
    if (name == "convex") return AssetKind::Convex;
    if (name == "multiplicative") return AssetKind::Multiplicative;
    if (name == "symbolic") return AssetKind::Symbolic;
    throw ParseError("unknown asset kind: " + name);
}

namespace {

bool default_consumable(AssetKind kind) {
    // Rival resources are drawn down by allocations; latency, availability
    // and labels are shared without depletion.
    return kind == AssetKind::Additive || kind == AssetKind::Convex;
}

} // namespace

AssetSpec::AssetSpec(std::string name,
                     AssetKind kind,
                     AssetValue lower,
                     AssetValue upper,
                     std::string unit,
                     std::optional<bool> consumable,
                     std::vector<std::string> universe)
    : name_(std::move(name)),
      kind_(kind),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      unit_(std::move(unit)),
      consumable_(consumable.value_or(default_consumable(kind))),
      universe_(std::move(universe)) {
    if (kind_ == AssetKind::Symbolic) {
        if (universe_.empty()) {
            throw DomainError("symbolic asset '" + name_ + "' needs a universe");
        }
        if (universe_.size() > SymbolSet::kMaxSymbols) {
            throw DomainError("symbolic universe of '" + name_ + "' exceeds 64 symbols");
        }
        if (!std::holds_alternative<SymbolSet>(lower_) || !std::holds_alternative<SymbolSet>(upper_)) {
            throw DomainError("symbolic bounds of '" + name_ + "' must be symbol sets");
        }
        SymbolSet all;
        for (std::size_t i = 0; i < universe_.size(); ++i) {
            all.insert(i);
        }
        if (!symbols(lower_).subset_of(symbols(upper_)) || !symbols(upper_).subset_of(all)) {
            throw DomainError("symbolic bounds of '" + name_ + "' must satisfy lower ⊆ upper ⊆ universe");
        }
        return;
    }
    if (!std::holds_alternative<double>(lower_) || !std::holds_alternative<double>(upper_)) {
        throw DomainError("numeric asset '" + name_ + "' needs scalar bounds");
    }
    const double lo = scalar(lower_);
    const double hi = scalar(upper_);
    switch (kind_) {
    case AssetKind::Additive:
    case AssetKind::Concave:
        if (lo < 0.0 || lo > hi) {
            throw DomainError("asset '" + name_ + "': need 0 <= lower <= upper");
        }
        break;
    case AssetKind::Convex:
        // Bottom of the order is the numerically largest value.
        if (hi < 0.0 || lo < hi) {
            throw DomainError("convex asset '" + name_ + "': need lower >= upper >= 0");
        }
        break;
    case AssetKind::Multiplicative:
        if (lo < 0.0 || lo > hi || hi > 1.0) {
            throw DomainError("multiplicative asset '" + name_ + "': need 0 <= lower <= upper <= 1");
        }
        break;
    case AssetKind::Symbolic:
        break;
    }
}

std::size_t AssetSpec::symbol_index(const std::string& symbol) const {
    auto it = std::find(universe_.begin(), universe_.end(), symbol);
    if (it == universe_.end()) {
        throw DomainError("symbol '" + symbol + "' not in universe of '" + name_ + "'");
    }
    return static_cast<std::size_t>(it - universe_.begin());
}

SymbolSet AssetSpec::symbol_set(const std::vector<std::string>& names) const {
    SymbolSet set;
    for (const auto& n : names) {
        set.insert(symbol_index(n));
    }
    return set;
}

std::vector<std::string> AssetSpec::symbol_names(SymbolSet set) const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < universe_.size(); ++i) {
        if (set.contains(i)) {
            names.push_back(universe_[i]);
        }
    }
    std::sort(names.begin(), names.end());
    return names;
}

bool AssetSpec::in_domain(const AssetValue& v) const {
    if (kind_ == AssetKind::Symbolic) {
        if (!std::holds_alternative<SymbolSet>(v)) {
            return false;
        }
        return symbols(v).subset_of(symbols(upper_)) && symbols(lower_).subset_of(symbols(v));
    }
    if (!std::holds_alternative<double>(v)) {
        return false;
    }
    const double x = scalar(v);
    if (kind_ == AssetKind::Convex) {
        return approx_ge(scalar(lower_), x) && approx_ge(x, scalar(upper_));
    }
    return approx_le(scalar(lower_), x) && approx_le(x, scalar(upper_));
}

void AssetSpec::require_in_domain(const AssetValue& v) const {
    if (!in_domain(v)) {
        std::ostringstream msg;
        msg << "value out of domain for asset '" << name_ << "'";
        if (std::holds_alternative<double>(v)) {
            msg << " (" << scalar(v) << ")";
        }
        throw DomainError(msg.str());
    }
}

bool AssetSpec::operator==(const AssetSpec& other) const {
    return name_ == other.name_ && kind_ == other.kind_ && lower_ == other.lower_ &&
           upper_ == other.upper_ && universe_ == other.universe_;
}

AssetValue aggregate(const AssetSpec& spec, const AssetValue& a1, const AssetValue& a2) {
    spec.require_in_domain(a1);
    spec.require_in_domain(a2);
    switch (spec.kind()) {
    case AssetKind::Additive:
        // Upgrades past the declared ceiling clamp instead of erroring.
        return std::min(scalar(a1) + scalar(a2), scalar(spec.upper()));
    case AssetKind::Concave:
        return std::max(scalar(a1), scalar(a2));
    case AssetKind::Convex:
        return std::min(scalar(a1), scalar(a2));
    case AssetKind::Multiplicative:
        return scalar(a1) * scalar(a2);
    case AssetKind::Symbolic:
        return symbols(a1) & symbols(a2);
    }
    throw DomainError("unreachable asset kind");
}

bool compare(const AssetSpec& spec, const AssetValue& a1, const AssetValue& a2) {
    spec.require_in_domain(a1);
    spec.require_in_domain(a2);
    switch (spec.kind()) {
    case AssetKind::Additive:
    case AssetKind::Concave:
    case AssetKind::Multiplicative:
        return approx_le(scalar(a1), scalar(a2));
    case AssetKind::Convex:
        return approx_ge(scalar(a1), scalar(a2));
    case AssetKind::Symbolic:
        return symbols(a1).subset_of(symbols(a2));
    }
    throw DomainError("unreachable asset kind");
}

bool satisfies(const AssetSpec& spec, const AssetValue& req, const AssetValue& avail) {
    switch (spec.kind()) {
    case AssetKind::Concave:
    case AssetKind::Convex:
        return compare(spec, avail, req);
    default:
        return compare(spec, req, avail);
    }
}

AssetValue aggregation_identity(const AssetSpec& spec) {
    switch (spec.kind()) {
    case AssetKind::Additive:
        return 0.0;
    case AssetKind::Concave:
    case AssetKind::Convex:
        return spec.lower();
    case AssetKind::Multiplicative:
        return spec.upper(); // 1 when the spec covers the full unit interval
    case AssetKind::Symbolic:
        return spec.upper();
    }
    throw DomainError("unreachable asset kind");
}

AssetValue vacuous_requirement(const AssetSpec& spec) {
    switch (spec.kind()) {
    case AssetKind::Concave:
    case AssetKind::Convex:
        return spec.upper(); // compare(avail, top) holds for every avail
    default:
        return spec.lower(); // compare(bottom, avail) holds for every avail
    }
}

AssetValue consume(const AssetSpec& spec, const AssetValue& capacity, const AssetValue& amount) {
    if (!spec.consumable()) {
        return capacity;
    }
    if (!satisfies(spec, amount, capacity)) {
        std::ostringstream msg;
        msg << "cannot consume from asset '" << spec.name() << "'";
        throw InsufficientCapacity(msg.str());
    }
    switch (spec.kind()) {
    case AssetKind::Additive:
    case AssetKind::Convex:
        return scalar(capacity) - scalar(amount);
    default:
        return capacity;
    }
}

AssetValue release(const AssetSpec& spec, const AssetValue& residual, const AssetValue& amount) {
    if (!spec.consumable()) {
        return residual;
    }
    switch (spec.kind()) {
    case AssetKind::Additive: {
        const double result = scalar(residual) + scalar(amount);
        if (result > scalar(spec.upper()) + kTolerance) {
            throw OverRelease("release past upper bound of '" + spec.name() + "'");
        }
        return result;
    }
    case AssetKind::Convex: {
        const double result = scalar(residual) + scalar(amount);
        if (result > scalar(spec.lower()) + kTolerance) {
            throw OverRelease("release past bound of '" + spec.name() + "'");
        }
        return result;
    }
    default:
        return residual;
    }
}

SpecSet::SpecSet(std::vector<AssetSpec> specs) {
    for (auto& s : specs) {
        add(std::move(s));
    }
}

void SpecSet::add(AssetSpec spec) {
    auto name = spec.name();
    if (!specs_.emplace(name, std::move(spec)).second) {
        throw DuplicateId("asset spec '" + name + "' already declared");
    }
}

const AssetSpec& SpecSet::at(const std::string& name) const {
    auto it = specs_.find(name);
    if (it == specs_.end()) {
        throw SpecMismatch("no asset spec named '" + name + "'");
    }
    return it->second;
}

const AssetSpec* SpecSet::find(const std::string& name) const {
    auto it = specs_.find(name);
    return it == specs_.end() ? nullptr : &it->second;
}

bool SpecSet::compatible_with(const SpecSet& other) const {
    if (specs_.size() != other.specs_.size()) {
        return false;
    }
    for (const auto& [name, spec] : specs_) {
        const AssetSpec* theirs = other.find(name);
        if (theirs == nullptr || theirs->kind() != spec.kind()) {
            return false;
        }
    }
    return true;
}

namespace {

const SpecSet& governing(const Bucket& b1, const Bucket& b2) {
    const SpecSetPtr& s1 = b1.specs();
    const SpecSetPtr& s2 = b2.specs();
    if (!s1 && !s2) {
        throw SpecMismatch("buckets have no governing spec set");
    }
    if (s1 && s2 && s1 != s2 && !s1->compatible_with(*s2)) {
        throw SpecMismatch("buckets governed by incompatible spec sets");
    }
    return s1 ? *s1 : *s2;
}

} // namespace

void Bucket::set(const std::string& name, AssetValue value) {
    if (!specs_) {
        throw SpecMismatch("bucket has no governing spec set");
    }
    const AssetSpec& spec = specs_->at(name);
    spec.require_in_domain(value);
    entries_.insert_or_assign(name, std::move(value));
}

std::optional<AssetValue> Bucket::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

AssetValue Bucket::effective(const std::string& name) const {
    auto it = entries_.find(name);
    if (it != entries_.end()) {
        return it->second;
    }
    return specs_->at(name).lower();
}

Bucket bucket_aggregate(const Bucket& b1, const Bucket& b2) {
    const SpecSet& specs = governing(b1, b2);
    Bucket out(b1.specs_ ? b1.specs_ : b2.specs_);
    auto entry = [&](const Bucket& b, const std::string& name, const AssetSpec& spec) {
        auto v = b.get(name);
        return v ? *v : aggregation_identity(spec);
    };
    for (const auto& [name, value] : b1.entries_) {
        const AssetSpec& spec = specs.at(name);
        out.entries_.emplace(name, aggregate(spec, value, entry(b2, name, spec)));
    }
    for (const auto& [name, value] : b2.entries_) {
        if (out.entries_.count(name)) {
            continue;
        }
        const AssetSpec& spec = specs.at(name);
        out.entries_.emplace(name, aggregate(spec, entry(b1, name, spec), value));
    }
    return out;
}

bool bucket_compare(const Bucket& b1, const Bucket& b2) {
    const SpecSet& specs = governing(b1, b2);
    auto check = [&](const std::string& name) {
        const AssetSpec& spec = specs.at(name);
        auto v1 = b1.get(name);
        auto v2 = b2.get(name);
        return compare(spec, v1 ? *v1 : spec.lower(), v2 ? *v2 : spec.lower());
    };
    for (const auto& [name, value] : b1.entries_) {
        (void)value;
        if (!check(name)) {
            return false;
        }
    }
    for (const auto& [name, value] : b2.entries_) {
        (void)value;
        if (b1.entries_.count(name) == 0 && !check(name)) {
            return false;
        }
    }
    return true;
}

bool bucket_satisfies(const Bucket& req, const Bucket& avail) {
    const SpecSet& specs = governing(req, avail);
    auto check = [&](const std::string& name) {
        const AssetSpec& spec = specs.at(name);
        auto r = req.get(name);
        auto a = avail.get(name);
        return satisfies(spec,
                         r ? *r : vacuous_requirement(spec),
                         a ? *a : spec.lower());
    };
    for (const auto& [name, value] : req.entries_) {
        (void)value;
        if (!check(name)) {
            return false;
        }
    }
    return true;
}

} // namespace cesim
