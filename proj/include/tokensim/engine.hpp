#pragma once

// Discrete-time ledger state machine. A global state is a partition of named
// real-valued variables over owning accounts; registered mechanisms are pure
// (state, action) -> state operators that agents invoke through transactions;
// policies observe a filtered subspace of the state and emit transactions,
// which are folded into blocks to advance the ledger one step at a time.

#include "tokensim/rng.hpp"

#include <any>
#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tokensim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EngineError : public Error {
public:
    using Error::Error;
};

/// Opaque account/agent identifier. Cryptographic key material is out of
/// scope; uniqueness and stability within a run are all that matters.
struct AddressId {
    std::uint32_t value = 0;
    friend constexpr auto operator<=>(AddressId, AddressId) = default;
};

enum class Unit : std::uint8_t { Xns, Usd, Count, Rate };

inline constexpr std::string_view unit_name(Unit u) noexcept {
    switch (u) {
        case Unit::Xns: return "XNS";
        case Unit::Usd: return "USD";
        case Unit::Count: return "count";
        case Unit::Rate: return "rate";
    }
    return "?";
}

/// One state variable. `owner` is the declaring account (local states
/// partition the global state over owners); `controller` is the agent with
/// the right to dispose of the value (debit or overwrite it).
struct StateVar {
    AddressId owner;
    AddressId controller;
    std::string name;
    Unit unit = Unit::Count;
    double value = 0.0;
};

struct VarKey {
    AddressId owner;
    std::string name;
};

namespace detail {
struct VarKeyLess {
    using is_transparent = void;
    static std::pair<std::uint32_t, std::string_view> project(const VarKey& k) noexcept {
        return {k.owner.value, k.name};
    }
    static std::pair<std::uint32_t, std::string_view> project(
        const std::pair<AddressId, std::string_view>& k) noexcept {
        return {k.first.value, k.second};
    }
    template <class A, class B>
    bool operator()(const A& a, const B& b) const noexcept {
        return project(a) < project(b);
    }
};
}  // namespace detail

/// The global state X: a collection of StateVars indexed by (owner, name).
/// Declaration order is the canonical iteration order, which keeps every
/// scan deterministic. Variables can be declared but never removed; the
/// state space only expands as accounts join.
class GlobalState {
public:
    std::size_t size() const noexcept { return vars_.size(); }

    bool contains(AddressId owner, std::string_view name) const {
        return index_.find(std::make_pair(owner, name)) != index_.end();
    }

    /// Declares a new variable. Rejects (owner, name) collisions to preserve
    /// the partition property, and negative token balances.
    void declare(StateVar var) {
        if (contains(var.owner, var.name)) {
            throw EngineError("state variable already declared: " + var.name +
                              " @" + std::to_string(var.owner.value));
        }
        if (var.unit == Unit::Xns && var.value < 0.0) {
            throw EngineError("token variable declared negative: " + var.name);
        }
        const auto idx = static_cast<std::uint32_t>(vars_.size());
        index_.emplace(VarKey{var.owner, var.name}, idx);
        by_name_[var.name].push_back(idx);
        vars_.push_back(std::move(var));
    }

    const StateVar& var(AddressId owner, std::string_view name) const {
        return vars_[index_of(owner, name)];
    }

    double value(AddressId owner, std::string_view name) const {
        return vars_[index_of(owner, name)].value;
    }

    void set_value(AddressId owner, std::string_view name, double v) {
        set_value_at(index_of(owner, name), v);
    }

    std::uint32_t index_of(AddressId owner, std::string_view name) const {
        const auto it = index_.find(std::make_pair(owner, name));
        if (it == index_.end()) {
            throw EngineError("unknown state variable: " + std::string(name) + " @" +
                              std::to_string(owner.value));
        }
        return it->second;
    }

    /// Indices of every variable with the given name, in declaration order.
    std::span<const std::uint32_t> indices_named(std::string_view name) const {
        const auto it = by_name_.find(name);
        if (it == by_name_.end()) return {};
        return it->second;
    }

    const StateVar& var_at(std::uint32_t index) const { return vars_[index]; }
    double value_at(std::uint32_t index) const { return vars_[index].value; }

    void set_value_at(std::uint32_t index, double v) {
        StateVar& sv = vars_[index];
        if (sv.unit == Unit::Xns && v < 0.0) {
            throw EngineError("token variable driven negative: " + sv.name + " @" +
                              std::to_string(sv.owner.value));
        }
        sv.value = v;
    }

    void add_value_at(std::uint32_t index, double delta) {
        set_value_at(index, vars_[index].value + delta);
    }

    /// Sum of all values carrying the given unit (conservation audits).
    double total(Unit unit) const noexcept {
        double sum = 0.0;
        for (const StateVar& sv : vars_) {
            if (sv.unit == unit) sum += sv.value;
        }
        return sum;
    }

    const std::vector<StateVar>& vars() const noexcept { return vars_; }

    /// Exact equality: identical declarations and bit-identical values.
    friend bool operator==(const GlobalState& a, const GlobalState& b) {
        if (a.vars_.size() != b.vars_.size()) return false;
        for (std::size_t i = 0; i < a.vars_.size(); ++i) {
            const StateVar& x = a.vars_[i];
            const StateVar& y = b.vars_[i];
            if (x.owner != y.owner || x.controller != y.controller || x.name != y.name ||
                x.unit != y.unit || x.value != y.value) {
                return false;
            }
        }
        return true;
    }

private:
    std::vector<StateVar> vars_;
    std::map<VarKey, std::uint32_t, detail::VarKeyLess> index_;
    std::map<std::string, std::vector<std::uint32_t>, std::less<>> by_name_;
};

/// Mechanism-specific transaction payload. Type-erased so the engine stays
/// agnostic to the action spaces mechanisms declare.
class Action {
public:
    Action() = default;
    template <class T>
    explicit Action(T payload) : payload_(std::move(payload)) {}

    bool empty() const noexcept { return !payload_.has_value(); }

    template <class T>
    const T& as() const {
        const T* p = std::any_cast<T>(&payload_);
        if (p == nullptr) throw EngineError("action payload type mismatch");
        return *p;
    }

    template <class T>
    const T* try_as() const noexcept {
        return std::any_cast<T>(&payload_);
    }

private:
    std::any payload_;
};

/// A transaction t = (agent, mechanism, action).
struct Transaction {
    AddressId agent;
    std::string mechanism;
    Action action;
};

struct ValidationResult {
    enum class Code : std::uint8_t { Accepted, UnknownMechanism, Unauthorized, MechanismInvalid };

    Code code = Code::Accepted;
    std::string detail;

    bool ok() const noexcept { return code == Code::Accepted; }

    static ValidationResult accepted() { return {}; }
    static ValidationResult unknown_mechanism(std::string d) {
        return {Code::UnknownMechanism, std::move(d)};
    }
    static ValidationResult unauthorized(std::string d) {
        return {Code::Unauthorized, std::move(d)};
    }
    static ValidationResult invalid(std::string d) {
        return {Code::MechanismInvalid, std::move(d)};
    }
};

inline constexpr std::string_view validation_code_name(ValidationResult::Code c) noexcept {
    switch (c) {
        case ValidationResult::Code::Accepted: return "accepted";
        case ValidationResult::Code::UnknownMechanism: return "unknown-mechanism";
        case ValidationResult::Code::Unauthorized: return "unauthorized";
        case ValidationResult::Code::MechanismInvalid: return "mechanism-invalid";
    }
    return "?";
}

/// A declared state-transition operator. `validate` covers both halves of
/// transaction validity: the agent must control every variable the
/// transition debits or overwrites (additive credits to third parties are
/// exempt, the way a ledger transfer needs only the sender's signature), and
/// any mechanism-specific predicate (no overdrafts, ...) must hold.
/// `transition` must be a pure function of (state, action) and may assume
/// `validate` accepted.
struct Mechanism {
    std::string id;
    std::function<ValidationResult(const GlobalState&, AddressId, const Action&)> validate;
    std::function<void(GlobalState&, const Action&)> transition;
};

/// Validation helper: the agent must control an existing variable.
inline ValidationResult require_control(const GlobalState& state, AddressId agent,
                                        AddressId owner, std::string_view name) {
    if (!state.contains(owner, name)) {
        return ValidationResult::invalid("missing state variable: " + std::string(name) + " @" +
                                         std::to_string(owner.value));
    }
    if (state.var(owner, name).controller != agent) {
        return ValidationResult::unauthorized("agent " + std::to_string(agent.value) +
                                              " does not control " + std::string(name) + " @" +
                                              std::to_string(owner.value));
    }
    return ValidationResult::accepted();
}

class MechanismSet {
public:
    /// Registers a mechanism and returns its id. Duplicate ids are an error.
    std::string register_mechanism(Mechanism mechanism) {
        if (mechanism.id.empty()) throw EngineError("mechanism id must not be empty");
        if (!mechanism.transition) throw EngineError("mechanism has no transition: " + mechanism.id);
        std::string id = mechanism.id;
        const auto [it, inserted] = mechanisms_.emplace(id, std::move(mechanism));
        if (!inserted) throw EngineError("mechanism already registered: " + id);
        return id;
    }

    const Mechanism* find(std::string_view id) const {
        const auto it = mechanisms_.find(id);
        return it == mechanisms_.end() ? nullptr : &it->second;
    }

    const Mechanism& at(std::string_view id) const {
        const Mechanism* m = find(id);
        if (m == nullptr) throw EngineError("unknown mechanism: " + std::string(id));
        return *m;
    }

    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::size_t size() const noexcept { return mechanisms_.size(); }

private:
    std::map<std::string, Mechanism, std::less<>> mechanisms_;
};

/// Accept/reject for a transaction against a state. Read-only; a rejected
/// transaction has no effect whatsoever.
inline ValidationResult validate_transaction(const GlobalState& state, const MechanismSet& mechanisms,
                                             const Transaction& tx) {
    const Mechanism* mech = mechanisms.find(tx.mechanism);
    if (mech == nullptr) {
        return ValidationResult::unknown_mechanism("unknown mechanism: " + tx.mechanism);
    }
    if (mech->validate) {
        return mech->validate(state, tx.agent, tx.action);
    }
    return ValidationResult::accepted();
}

/// Validates and, on acceptance, applies the transition in place. On
/// rejection the state is untouched.
inline ValidationResult apply_in_place(GlobalState& state, const MechanismSet& mechanisms,
                                       const Transaction& tx) {
    ValidationResult vr = validate_transaction(state, mechanisms, tx);
    if (!vr.ok()) return vr;
    mechanisms.at(tx.mechanism).transition(state, tx.action);
    return vr;
}

/// Value-semantics atomic update X+ = f(X, u). Rejected transactions return
/// the input state unchanged alongside the rejection.
inline std::pair<GlobalState, ValidationResult> apply_transaction(const GlobalState& state,
                                                                  const MechanismSet& mechanisms,
                                                                  const Transaction& tx) {
    GlobalState next = state;
    ValidationResult vr = apply_in_place(next, mechanisms, tx);
    return {std::move(next), std::move(vr)};
}

struct TxRejection {
    std::size_t index = 0;
    Transaction tx;
    ValidationResult result;
};

struct BlockApplication {
    std::vector<Transaction> applied;
    std::vector<TxRejection> rejected;
};

/// Left-fold of apply over an ordered transaction list. Transactions that
/// are invalid at their fold position are skipped and reported, never fatal.
inline BlockApplication apply_block_in_place(GlobalState& state, const MechanismSet& mechanisms,
                                             std::vector<Transaction> txs) {
    BlockApplication result;
    result.applied.reserve(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i) {
        ValidationResult vr = apply_in_place(state, mechanisms, txs[i]);
        if (vr.ok()) {
            result.applied.push_back(std::move(txs[i]));
        } else {
            result.rejected.push_back({i, std::move(txs[i]), std::move(vr)});
        }
    }
    return result;
}

struct BlockResult {
    GlobalState state;
    std::vector<Transaction> applied;
    std::vector<TxRejection> rejected;
};

inline BlockResult apply_block(const GlobalState& state, const MechanismSet& mechanisms,
                               std::vector<Transaction> txs) {
    BlockResult result{state, {}, {}};
    BlockApplication app = apply_block_in_place(result.state, mechanisms, std::move(txs));
    result.applied = std::move(app.applied);
    result.rejected = std::move(app.rejected);
    return result;
}

struct CommuteResult {
    bool commutes = false;
    bool both_orders_valid = false;
    std::string reason;
};

/// Order-independence check: do the two transactions produce the same state
/// in either order? Transactions with disjoint footprints always do; the
/// check itself is semantic (brute force over both orders).
inline CommuteResult commutes(const GlobalState& state, const MechanismSet& mechanisms,
                              const Transaction& tx_a, const Transaction& tx_b) {
    auto [s_a, vr_a] = apply_transaction(state, mechanisms, tx_a);
    if (!vr_a.ok()) return {false, false, "first tx invalid in order (a,b): " + vr_a.detail};
    auto [s_ab, vr_ab] = apply_transaction(s_a, mechanisms, tx_b);
    if (!vr_ab.ok()) return {false, false, "second tx invalid in order (a,b): " + vr_ab.detail};

    auto [s_b, vr_b] = apply_transaction(state, mechanisms, tx_b);
    if (!vr_b.ok()) return {false, false, "first tx invalid in order (b,a): " + vr_b.detail};
    auto [s_ba, vr_ba] = apply_transaction(s_b, mechanisms, tx_a);
    if (!vr_ba.ok()) return {false, false, "second tx invalid in order (b,a): " + vr_ba.detail};

    if (s_ab == s_ba) return {true, true, ""};
    return {false, true, "orders yield different states"};
}

/// Observable subspace selector Y <= X.
using ObservationFilter = std::function<bool(const StateVar&)>;

/// Read-only view of the state restricted to a policy's observation filter.
/// Strategies receive this instead of the raw state, so they cannot read
/// variables outside their declared subspace.
class StateView {
public:
    StateView(const GlobalState& state, const ObservationFilter* filter)
        : state_(&state), filter_(filter) {}

    bool observable(AddressId owner, std::string_view name) const {
        if (!state_->contains(owner, name)) return false;
        return passes(state_->var(owner, name));
    }

    double value(AddressId owner, std::string_view name) const {
        const StateVar& sv = state_->var(owner, name);
        if (!passes(sv)) {
            throw EngineError("variable not observable under policy filter: " + std::string(name) +
                              " @" + std::to_string(owner.value));
        }
        return sv.value;
    }

    /// Visits observable variables with the given name, declaration order.
    template <class Fn>
    void for_each_named(std::string_view name, Fn&& fn) const {
        for (const std::uint32_t idx : state_->indices_named(name)) {
            const StateVar& sv = state_->var_at(idx);
            if (passes(sv)) fn(sv);
        }
    }

private:
    bool passes(const StateVar& sv) const {
        return filter_ == nullptr || !(*filter_) || (*filter_)(sv);
    }

    const GlobalState* state_;
    const ObservationFilter* filter_;
};

/// A state-dependent strategy over one mechanism. The strategy is evaluated
/// only on steps divisible by `monitoring_interval` (the monitoring rate is
/// explicit so it can be tuned), sees the state through `observes`, and may
/// emit no action at all. `private_params` carries opaque per-agent
/// parameters (private signals and goals live here, outside the shared
/// state).
struct Policy {
    AddressId agent;
    std::string mechanism;
    std::uint64_t monitoring_interval = 1;
    ObservationFilter observes;
    std::any private_params;
    std::function<std::optional<Action>(const StateView&, const std::any&, RngStream&)> strategy;
};

/// Evaluates policies against a fixed pre-block state and collects the
/// emitted transactions in policy registration order. All policies of one
/// step share one noise stream; draw order equals registration order.
inline std::vector<Transaction> evaluate_policies(const GlobalState& state,
                                                  std::span<const Policy> policies,
                                                  std::uint64_t step, const EnvNoise& noise) {
    std::vector<Transaction> txs;
    RngStream stream = noise.stream_for_step(step);
    for (const Policy& policy : policies) {
        if (policy.monitoring_interval == 0 || step % policy.monitoring_interval != 0) continue;
        StateView view(state, &policy.observes);
        std::optional<Action> action = policy.strategy(view, policy.private_params, stream);
        if (action.has_value()) {
            txs.push_back({policy.agent, policy.mechanism, std::move(*action)});
        }
    }
    return txs;
}

/// One applied block: the transactions that made it into the ledger.
struct Block {
    std::vector<Transaction> txs;
};

/// Ledger state L = {X, T, K} plus the mechanism registry the transactions
/// refer to. Replaying T from the genesis state reproduces X exactly.
class Ledger {
public:
    Ledger() = default;
    explicit Ledger(GlobalState genesis, MechanismSet mechanisms = {})
        : genesis_(genesis), state_(std::move(genesis)), mechanisms_(std::move(mechanisms)) {}

    const GlobalState& state() const noexcept { return state_; }
    const GlobalState& genesis() const noexcept { return genesis_; }
    std::uint64_t height() const noexcept { return height_; }
    const std::vector<Block>& log() const noexcept { return log_; }

    MechanismSet& mechanisms() noexcept { return mechanisms_; }
    const MechanismSet& mechanisms() const noexcept { return mechanisms_; }

    GlobalState& mutable_state() noexcept { return state_; }

    /// One closed-loop step: evaluate policies at the current height against
    /// the pre-block state, fold the resulting block, bump the height.
    /// Rejected transactions are skipped and returned, never fatal.
    std::vector<TxRejection> step(std::span<const Policy> policies, const EnvNoise& noise) {
        std::vector<Transaction> txs = evaluate_policies(state_, policies, height_, noise);
        BlockApplication app = apply_block_in_place(state_, mechanisms_, std::move(txs));
        log_.push_back(Block{std::move(app.applied)});
        ++height_;
        return std::move(app.rejected);
    }

    /// Folds the recorded transaction log over the genesis state.
    GlobalState replay() const {
        GlobalState state = genesis_;
        for (const Block& block : log_) {
            for (const Transaction& tx : block.txs) {
                ValidationResult vr = apply_in_place(state, mechanisms_, tx);
                if (!vr.ok()) {
                    throw EngineError("logged transaction failed on replay: " + vr.detail);
                }
            }
        }
        return state;
    }

private:
    GlobalState genesis_;
    GlobalState state_;
    MechanismSet mechanisms_;
    std::vector<Block> log_;
    std::uint64_t height_ = 0;
};

/// Ledger trajectory: the K+1 ledger states reached from genesis, with
/// element 0 the genesis ledger itself.
inline std::vector<Ledger> run_trajectory(const Ledger& genesis, std::span<const Policy> policies,
                                          std::uint64_t steps, const EnvNoise& noise) {
    std::vector<Ledger> trajectory;
    trajectory.reserve(steps + 1);
    trajectory.push_back(genesis);
    Ledger current = genesis;
    for (std::uint64_t k = 0; k < steps; ++k) {
        current.step(policies, noise);
        trajectory.push_back(current);
    }
    return trajectory;
}

/// Action payload of the example transfer mechanism. The source is explicit
/// because transitions are pure in (state, action); validity ties the source
/// to the submitting agent's control rights.
struct TransferAction {
    AddressId from;
    AddressId to;
    double amount = 0.0;
};

/// Example mechanism: moves `amount` between two accounts' variables of the
/// same name. The agent must control the debited source; the credit side
/// needs no rights, the way a ledger transfer needs only the sender's
/// signature.
inline Mechanism make_transfer_mechanism(std::string var_name = "balance") {
    Mechanism mech;
    mech.id = "transfer_" + var_name;
    mech.validate = [name = var_name](const GlobalState& state, AddressId agent,
                                      const Action& action) -> ValidationResult {
        const TransferAction* p = action.try_as<TransferAction>();
        if (p == nullptr) return ValidationResult::invalid("transfer: bad action payload");
        if (!(p->amount >= 0.0)) return ValidationResult::invalid("transfer: negative amount");
        ValidationResult ctrl = require_control(state, agent, p->from, name);
        if (!ctrl.ok()) return ctrl;
        if (!state.contains(p->to, name)) {
            return ValidationResult::invalid("transfer: recipient has no " + name + " variable");
        }
        if (state.value(p->from, name) < p->amount) {
            return ValidationResult::invalid("transfer: insufficient funds");
        }
        return ValidationResult::accepted();
    };
    mech.transition = [name = var_name](GlobalState& state, const Action& action) {
        const TransferAction& p = action.as<TransferAction>();
        const std::uint32_t src = state.index_of(p.from, name);
        const std::uint32_t dst = state.index_of(p.to, name);
        state.add_value_at(src, -p.amount);
        state.add_value_at(dst, p.amount);
    };
    return mech;
}

}  // namespace tokensim
