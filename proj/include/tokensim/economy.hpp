#pragma once

// MainNet-style token economy built on the ledger engine: a subsidy pool
// that decays exponentially toward application developers and is replenished
// by platform fees, resource-fee flows between developers, providers, and
// the foundation, a configurable adoption model, and an
// equation-of-exchange price as the headline KPI.
//
// Everything runs as engine transactions, so token conservation is a ledger
// property rather than a bookkeeping convention.

#include "tokensim/engine.hpp"
#include "tokensim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tokensim {

class EconomyError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Subsidy pool
// ---------------------------------------------------------------------------

/// Closed-form pool balance A0 * exp(-lambda * t). This is the oracle the
/// simulated pool is tested against.
inline double analytic_pool_balance(double a0, double lambda, double t) {
    if (!(a0 >= 0.0)) throw EconomyError("analytic_pool_balance: negative initial pool");
    if (!(lambda >= 0.0)) throw EconomyError("analytic_pool_balance: negative decay rate");
    if (!(t >= 0.0)) throw EconomyError("analytic_pool_balance: negative time");
    return a0 * std::exp(-lambda * t);
}

/// Decaying, replenishable token reserve.
struct SubsidyPool {
    double balance = 0.0;            // XNS
    double decay_rate = 0.0;         // 1/day
    bool replenish_enabled = true;
    double cumulative_disbursed = 0.0;
    double cumulative_replenished = 0.0;
};

struct DisburseResult {
    double amount = 0.0;
    SubsidyPool pool;
};

/// One disbursement interval with exact-exponential stepping: the balance is
/// multiplied by exp(-lambda*dt) and the difference is released. For
/// lambda*dt <= ln 2 the subtraction is exact (Sterbenz), so the daily
/// balance path is the analytic curve up to one multiplicative rounding per
/// step and `balance - amount == new balance` holds bit-for-bit.
inline DisburseResult pool_disburse(SubsidyPool pool, double dt = 1.0) {
    if (!(dt > 0.0)) throw EconomyError("pool_disburse: dt must be > 0");
    const double remaining = pool.balance * std::exp(-pool.decay_rate * dt);
    const double amount = pool.balance - remaining;
    pool.balance = remaining;
    pool.cumulative_disbursed += amount;
    return {amount, pool};
}

struct ReplenishResult {
    SubsidyPool pool;
    double to_treasury = 0.0;  // routed here when replenishment is disabled
};

/// Adds collected platform fees back to the pool, or reports them for the
/// treasury when replenishment is off. cumulative_replenished counts only
/// tokens that actually entered the pool.
inline ReplenishResult pool_replenish(SubsidyPool pool, double fees_xns) {
    if (!(fees_xns >= 0.0)) throw EconomyError("pool_replenish: negative fee amount");
    if (pool.replenish_enabled) {
        pool.balance += fees_xns;
        pool.cumulative_replenished += fees_xns;
        return {pool, 0.0};
    }
    return {pool, fees_xns};
}

// ---------------------------------------------------------------------------
// Parameters and behavioral model
// ---------------------------------------------------------------------------

/// Economy parameters. The decay mechanics anchor the model; the adoption
/// and price parameters configure the replacement behavioral layer (the
/// production network's own behavioral model is not public), with defaults
/// documented in the README.
struct EconomyParams {
    double total_supply = 1e9;            // fixed XNS supply
    double velocity = 20.0;               // token turnover, 1/year
    double platform_fee_rate = 0.2;       // tau, share of resource fees taxed to the platform
    double fee_per_user_usd_day = 0.05;   // resource cost footprint per user
    double dev_arrival_base_rate = 0.05;  // developers/day with no subsidy pull
    double dev_attractiveness_coeff = 5.0;  // alpha, subsidy -> arrivals coupling
    double dev_usd_scale = 1000.0;        // USD/day that doubles the arrival rate at alpha=1
    double user_growth_rate = 2.0;        // g, users/(app*day)
    double user_carrying_capacity = 1e6;  // K_cap
    double demand_sigma = 0.02;           // lognormal demand volatility per sqrt(day)
    double price_floor = 1e-4;            // p_min, USD
    double demand_ema_alpha = 0.05;       // demand smoothing fraction

    void validate() const {
        auto fail = [](const std::string& msg) { throw EconomyError("economy params: " + msg); };
        if (!(total_supply > 0.0)) fail("total_supply must be > 0");
        if (!(velocity > 0.0)) fail("velocity must be > 0");
        if (!(platform_fee_rate >= 0.0 && platform_fee_rate <= 1.0)) {
            fail("platform_fee_rate must lie in [0, 1]");
        }
        if (!(fee_per_user_usd_day >= 0.0)) fail("fee_per_user_usd_day must be >= 0");
        if (!(dev_arrival_base_rate >= 0.0)) fail("dev_arrival_base_rate must be >= 0");
        if (!(dev_attractiveness_coeff >= 0.0)) fail("dev_attractiveness_coeff must be >= 0");
        if (!(dev_usd_scale > 0.0)) fail("dev_usd_scale must be > 0");
        if (!(user_growth_rate >= 0.0)) fail("user_growth_rate must be >= 0");
        if (!(user_carrying_capacity > 0.0)) fail("user_carrying_capacity must be > 0");
        if (!(demand_sigma >= 0.0)) fail("demand_sigma must be >= 0");
        if (!(price_floor >= 0.0)) fail("price_floor must be >= 0");
        if (!(demand_ema_alpha > 0.0 && demand_ema_alpha <= 1.0)) {
            fail("demand_ema_alpha must lie in (0, 1]");
        }
    }
};

struct EconomyToggles {
    bool replenish = true;  // platform fees refill the pool (off: they accrue to the treasury)
    bool noise = true;      // stochastic draws (off: deterministic expected-value dynamics)
    bool behavior = true;   // adoption/fee/usage layer (off: pure pool decay)
};

/// Poisson developer arrivals at rate mu per day.
inline std::int64_t developer_arrivals(double mu, RngStream& rng) {
    if (!(mu >= 0.0)) throw EconomyError("developer_arrivals: negative rate");
    return rng.poisson(mu);
}

/// Logistic user growth driven by the number of deployed applications.
inline double update_users(double users, double n_apps, const EconomyParams& params) {
    const double grown =
        users + params.user_growth_rate * n_apps * (1.0 - users / params.user_carrying_capacity);
    return std::clamp(grown, 0.0, params.user_carrying_capacity);
}

/// Daily resource fees in USD.
inline double compute_fees(double users, const EconomyParams& params) {
    if (!(users >= 0.0)) throw EconomyError("compute_fees: negative user count");
    return users * params.fee_per_user_usd_day;
}

struct PriceQuote {
    double price_usd = 0.0;
    double demand_ema = 0.0;  // annualized USD demand after smoothing
};

/// Equation-of-exchange price: P = D_annual / (V * S_circ), with EMA-smoothed
/// demand, a multiplicative noise factor, and a floor. The floor is applied
/// after the noise so the price >= price_floor invariant holds
/// unconditionally.
inline PriceQuote update_price(double fees_usd, double demand_ema, double circ_supply,
                               const EconomyParams& params, double noise_factor = 1.0) {
    if (!(circ_supply > 0.0)) throw EconomyError("update_price: circulating supply must be > 0");
    if (!(noise_factor > 0.0)) throw EconomyError("update_price: noise factor must be > 0");
    const double annualized = 365.0 * fees_usd;
    const double ema =
        params.demand_ema_alpha * annualized + (1.0 - params.demand_ema_alpha) * demand_ema;
    const double fair = ema / (params.velocity * circ_supply);
    return {std::max(params.price_floor, fair * noise_factor), ema};
}

inline PriceQuote update_price(double fees_usd, double demand_ema, double circ_supply,
                               const EconomyParams& params, RngStream& rng) {
    return update_price(fees_usd, demand_ema, circ_supply, params,
                        rng.lognormal_factor(params.demand_sigma));
}

// ---------------------------------------------------------------------------
// Ledger layout
// ---------------------------------------------------------------------------

namespace accounts {
inline constexpr AddressId kTreasury{0};  // the foundation; operates the platform mechanisms
inline constexpr AddressId kPool{1};
inline constexpr AddressId kProvider{2};  // resource providers, aggregated
inline constexpr AddressId kMarket{3};    // market observables live here
inline constexpr std::uint32_t kFirstDeveloper = 1000;

inline constexpr AddressId developer(std::uint64_t ordinal) noexcept {
    return AddressId{static_cast<std::uint32_t>(kFirstDeveloper + ordinal)};
}
}  // namespace accounts

namespace vars {
inline constexpr std::string_view kBalance = "balance";
inline constexpr std::string_view kEscrow = "escrow";          // disbursed before any developer exists
inline constexpr std::string_view kDevWallet = "dev_wallet";
inline constexpr std::string_view kPrice = "price_usd";
inline constexpr std::string_view kDemandEma = "demand_ema";
inline constexpr std::string_view kUsers = "n_users";
inline constexpr std::string_view kApps = "n_apps";
inline constexpr std::string_view kDevelopers = "n_developers";
inline constexpr std::string_view kFeesUsd = "fees_usd";
inline constexpr std::string_view kPaidFees = "paid_fees_xns";  // telemetry: settled this block
}  // namespace vars

namespace mech {
inline constexpr std::string_view kDisburse = "subsidy_disburse";
inline constexpr std::string_view kOnboard = "developer_onboard";
inline constexpr std::string_view kUsage = "usage_update";
inline constexpr std::string_view kSettle = "fee_settle";
inline constexpr std::string_view kMarket = "market_update";
}  // namespace mech

// Action payloads. Stochastic draws happen policy-side and ride in the
// action, so transitions stay pure and the transaction log replays exactly.
struct DisburseAction {
    double amount = 0.0;  // XNS leaving the decaying balance this day
};
struct OnboardAction {
    std::int64_t count = 0;  // developers arriving this day
};
struct UsageAction {
    double users_new = 0.0;  // absolute user level after today's growth
};
struct SettleAction {
    double fees_usd = 0.0;      // today's resource-fee demand
    double fees_xns_due = 0.0;  // converted at the last market price
};
struct MarketAction {
    double noise_factor = 1.0;  // mean-one lognormal demand shock
};

/// The two fee credits carved out of one settled amount. Shared by the
/// settle transition and the KPI bookkeeping so both sides compute
/// bit-identical values.
struct FeeSplit {
    double provider_credit = 0.0;
    double platform_credit = 0.0;
};

inline FeeSplit split_fee_credits(double paid_xns, double tau) noexcept {
    const double provider_credit = paid_xns * (1.0 - tau);
    return {provider_credit, paid_xns - provider_credit};
}

// ---------------------------------------------------------------------------
// Mechanism factories
// ---------------------------------------------------------------------------

/// Releases `amount` from the decaying pool balance and splits it equally
/// across developer wallets. With no developers yet, the amount parks in the
/// pool's escrow variable and is released together with the first real
/// disbursement once a developer exists.
inline Mechanism make_disburse_mechanism() {
    Mechanism m;
    m.id = std::string(mech::kDisburse);
    m.validate = [](const GlobalState& state, AddressId agent,
                    const Action& action) -> ValidationResult {
        const DisburseAction* p = action.try_as<DisburseAction>();
        if (p == nullptr) return ValidationResult::invalid("disburse: bad action payload");
        if (!(p->amount >= 0.0)) return ValidationResult::invalid("disburse: negative amount");
        for (const std::string_view name : {vars::kBalance, vars::kEscrow}) {
            ValidationResult ctrl = require_control(state, agent, accounts::kPool, name);
            if (!ctrl.ok()) return ctrl;
        }
        if (state.value(accounts::kPool, vars::kBalance) < p->amount) {
            return ValidationResult::invalid("disburse: amount exceeds pool balance");
        }
        return ValidationResult::accepted();
    };
    m.transition = [](GlobalState& state, const Action& action) {
        const double amount = action.as<DisburseAction>().amount;
        const std::uint32_t bal = state.index_of(accounts::kPool, vars::kBalance);
        const std::uint32_t escrow = state.index_of(accounts::kPool, vars::kEscrow);
        state.add_value_at(bal, -amount);

        const std::span<const std::uint32_t> wallets = state.indices_named(vars::kDevWallet);
        if (wallets.empty()) {
            state.add_value_at(escrow, amount);
            return;
        }
        const double total = amount + state.value_at(escrow);
        state.set_value_at(escrow, 0.0);
        const std::size_t n = wallets.size();
        const double share = total / static_cast<double>(n);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            state.add_value_at(wallets[i], share);
        }
        // Last wallet takes the remainder so the credited sum equals `total`.
        const double remainder = total - share * static_cast<double>(n - 1);
        state.add_value_at(wallets[n - 1], remainder > 0.0 ? remainder : 0.0);
    };
    return m;
}

/// Declares wallets for newly arrived developers; each arrival deploys one
/// application. Wallet variables are owned by the developer address and
/// controlled by the platform operator, which meters fees against them.
inline Mechanism make_onboard_mechanism() {
    Mechanism m;
    m.id = std::string(mech::kOnboard);
    m.validate = [](const GlobalState& state, AddressId agent,
                    const Action& action) -> ValidationResult {
        const OnboardAction* p = action.try_as<OnboardAction>();
        if (p == nullptr) return ValidationResult::invalid("onboard: bad action payload");
        if (p->count < 1) return ValidationResult::invalid("onboard: count must be >= 1");
        for (const std::string_view name : {vars::kDevelopers, vars::kApps}) {
            ValidationResult ctrl = require_control(state, agent, accounts::kMarket, name);
            if (!ctrl.ok()) return ctrl;
        }
        const auto existing =
            static_cast<std::uint64_t>(state.value(accounts::kMarket, vars::kDevelopers));
        for (std::int64_t i = 0; i < p->count; ++i) {
            if (state.contains(accounts::developer(existing + static_cast<std::uint64_t>(i)),
                               vars::kDevWallet)) {
                return ValidationResult::invalid("onboard: developer wallet already declared");
            }
        }
        return ValidationResult::accepted();
    };
    m.transition = [](GlobalState& state, const Action& action) {
        const std::int64_t count = action.as<OnboardAction>().count;
        const auto existing =
            static_cast<std::uint64_t>(state.value(accounts::kMarket, vars::kDevelopers));
        const AddressId controller = state.var(accounts::kMarket, vars::kDevelopers).controller;
        for (std::int64_t i = 0; i < count; ++i) {
            const AddressId dev = accounts::developer(existing + static_cast<std::uint64_t>(i));
            state.declare({dev, controller, std::string(vars::kDevWallet), Unit::Xns, 0.0});
        }
        const double delta = static_cast<double>(count);
        state.add_value_at(state.index_of(accounts::kMarket, vars::kDevelopers), delta);
        state.add_value_at(state.index_of(accounts::kMarket, vars::kApps), delta);
    };
    return m;
}

/// Overwrites the user level with the policy-computed logistic step.
inline Mechanism make_usage_mechanism(double user_carrying_capacity) {
    Mechanism m;
    m.id = std::string(mech::kUsage);
    m.validate = [cap = user_carrying_capacity](const GlobalState& state, AddressId agent,
                                                const Action& action) -> ValidationResult {
        const UsageAction* p = action.try_as<UsageAction>();
        if (p == nullptr) return ValidationResult::invalid("usage: bad action payload");
        if (!(p->users_new >= 0.0 && p->users_new <= cap)) {
            return ValidationResult::invalid("usage: user level outside [0, capacity]");
        }
        return require_control(state, agent, accounts::kMarket, vars::kUsers);
    };
    m.transition = [](GlobalState& state, const Action& action) {
        state.set_value(accounts::kMarket, vars::kUsers, action.as<UsageAction>().users_new);
    };
    return m;
}

/// Collects resource fees from developer wallets, capped at what the wallets
/// hold (proportional scale-down on shortfall), and splits the paid amount
/// (1-tau) to the provider and tau to the pool (or the treasury when
/// replenishment is off).
inline Mechanism make_settle_mechanism(double tau, bool replenish_enabled) {
    Mechanism m;
    m.id = std::string(mech::kSettle);
    m.validate = [](const GlobalState& state, AddressId agent,
                    const Action& action) -> ValidationResult {
        const SettleAction* p = action.try_as<SettleAction>();
        if (p == nullptr) return ValidationResult::invalid("settle: bad action payload");
        if (!(p->fees_usd >= 0.0) || !(p->fees_xns_due >= 0.0)) {
            return ValidationResult::invalid("settle: negative fee amount");
        }
        for (const std::uint32_t idx : state.indices_named(vars::kDevWallet)) {
            if (state.var_at(idx).controller != agent) {
                return ValidationResult::unauthorized("settle: agent does not control wallet @" +
                                                      std::to_string(state.var_at(idx).owner.value));
            }
        }
        for (const std::string_view name : {vars::kFeesUsd, vars::kPaidFees}) {
            ValidationResult ctrl = require_control(state, agent, accounts::kMarket, name);
            if (!ctrl.ok()) return ctrl;
        }
        if (!state.contains(accounts::kProvider, vars::kBalance) ||
            !state.contains(accounts::kPool, vars::kBalance) ||
            !state.contains(accounts::kTreasury, vars::kBalance)) {
            return ValidationResult::invalid("settle: economy accounts not declared");
        }
        return ValidationResult::accepted();
    };
    m.transition = [tau, replenish_enabled](GlobalState& state, const Action& action) {
        const SettleAction& p = action.as<SettleAction>();
        const std::span<const std::uint32_t> wallets = state.indices_named(vars::kDevWallet);

        double available = 0.0;
        for (const std::uint32_t idx : wallets) available += state.value_at(idx);

        double paid = 0.0;
        if (available > 0.0 && p.fees_xns_due > 0.0) {
            if (p.fees_xns_due >= available) {
                for (const std::uint32_t idx : wallets) {  // full drain, exact
                    paid += state.value_at(idx);
                    state.set_value_at(idx, 0.0);
                }
            } else {
                const double ratio = p.fees_xns_due / available;
                for (const std::uint32_t idx : wallets) {
                    const double payment = state.value_at(idx) * ratio;
                    state.add_value_at(idx, -payment);
                    paid += payment;
                }
            }
        }

        const FeeSplit split = split_fee_credits(paid, tau);
        state.add_value_at(state.index_of(accounts::kProvider, vars::kBalance),
                           split.provider_credit);
        const AddressId platform_sink = replenish_enabled ? accounts::kPool : accounts::kTreasury;
        state.add_value_at(state.index_of(platform_sink, vars::kBalance), split.platform_credit);

        state.set_value(accounts::kMarket, vars::kFeesUsd, p.fees_usd);
        state.set_value(accounts::kMarket, vars::kPaidFees, paid);
    };
    return m;
}

/// Updates the demand EMA and the XNS price from today's fees and the
/// circulating supply (total minus treasury, pool, and escrow holdings).
inline Mechanism make_market_mechanism(const EconomyParams& params) {
    Mechanism m;
    m.id = std::string(mech::kMarket);
    m.validate = [](const GlobalState& state, AddressId agent,
                    const Action& action) -> ValidationResult {
        const MarketAction* p = action.try_as<MarketAction>();
        if (p == nullptr) return ValidationResult::invalid("market: bad action payload");
        if (!(p->noise_factor > 0.0)) {
            return ValidationResult::invalid("market: noise factor must be > 0");
        }
        for (const std::string_view name : {vars::kPrice, vars::kDemandEma}) {
            ValidationResult ctrl = require_control(state, agent, accounts::kMarket, name);
            if (!ctrl.ok()) return ctrl;
        }
        return ValidationResult::accepted();
    };
    m.transition = [params](GlobalState& state, const Action& action) {
        const double noise_factor = action.as<MarketAction>().noise_factor;
        const double fees_usd = state.value(accounts::kMarket, vars::kFeesUsd);
        const double demand_ema = state.value(accounts::kMarket, vars::kDemandEma);
        const double locked = state.value(accounts::kTreasury, vars::kBalance) +
                              state.value(accounts::kPool, vars::kBalance) +
                              state.value(accounts::kPool, vars::kEscrow);
        const double circ = params.total_supply - locked;

        PriceQuote quote;
        if (circ > 0.0) {
            quote = update_price(fees_usd, demand_ema, circ, params, noise_factor);
        } else {
            // Genesis corner: everything is still locked. Demand keeps
            // accumulating, the price sits on the floor.
            quote.demand_ema = params.demand_ema_alpha * (365.0 * fees_usd) +
                               (1.0 - params.demand_ema_alpha) * demand_ema;
            quote.price_usd = params.price_floor;
        }
        state.set_value(accounts::kMarket, vars::kDemandEma, quote.demand_ema);
        state.set_value(accounts::kMarket, vars::kPrice, quote.price_usd);
    };
    return m;
}

/// Spec-shaped settlement entry point: converts a USD fee level at the given
/// price and routes it through the fee_settle mechanism, returning the new
/// state. Value semantics; used by tests and small drivers.
inline GlobalState settle_fee_flows(const GlobalState& state, const MechanismSet& mechanisms,
                                    AddressId agent, double fees_usd, double price) {
    if (!(price > 0.0)) throw EconomyError("settle_fee_flows: price must be > 0");
    if (!(fees_usd >= 0.0)) throw EconomyError("settle_fee_flows: negative fees");
    Transaction tx{agent, std::string(mech::kSettle),
                   Action(SettleAction{fees_usd, fees_usd / price})};
    auto [next, vr] = apply_transaction(state, mechanisms, tx);
    if (!vr.ok()) throw EconomyError("settle_fee_flows rejected: " + vr.detail);
    return std::move(next);
}

// ---------------------------------------------------------------------------
// Assembled economy
// ---------------------------------------------------------------------------

/// One KPI row per simulated day.
struct KpiRecord {
    std::int64_t t = 0;             // day index, 1-based
    double pool_balance_xns = 0.0;  // decaying subsidy balance (escrow excluded)
    double cum_subsidy_xns = 0.0;   // total released from the decaying balance
    double cum_subsidy_usd = 0.0;   // each day's release valued at that day's price
    double price_usd = 0.0;
    double treasury_xns = 0.0;
    double treasury_usd = 0.0;
    double n_developers = 0.0;
    double n_users = 0.0;
    double fees_usd = 0.0;  // resource-fee demand settled this day
};

/// A single seeded economy run: genesis wiring, the five platform policies,
/// and one KPI record per step. Policies evaluate against the pre-block
/// state X(k); couplings that the daily ordering would make intra-block
/// (today's arrivals -> today's user growth -> today's fees) therefore act
/// with a one-day lag, which is documented behavior.
class EconomySim {
public:
    EconomySim(double initial_pool_xns, double decay_rate_per_day, const EconomyParams& params,
               const EconomyToggles& toggles, std::uint64_t run_seed)
        : params_(params), toggles_(toggles), noise_(run_seed) {
        params_.validate();
        if (!(initial_pool_xns >= 0.0)) {
            throw EconomyError("initial pool must be >= 0");
        }
        if (initial_pool_xns > params_.total_supply) {
            throw EconomyError("initial pool exceeds total supply");
        }
        if (!(decay_rate_per_day >= 0.0)) {
            throw EconomyError("decay rate must be >= 0");
        }

        pool_book_.balance = initial_pool_xns;
        pool_book_.decay_rate = decay_rate_per_day;
        pool_book_.replenish_enabled = toggles_.replenish;

        ledger_ = Ledger(make_genesis_state(initial_pool_xns), make_mechanism_set());
        policies_ = make_policies(decay_rate_per_day);
    }

    EconomySim(const EconomySim&) = delete;
    EconomySim& operator=(const EconomySim&) = delete;
    EconomySim(EconomySim&&) = default;
    EconomySim& operator=(EconomySim&&) = default;

    /// Advances one day and returns the day's KPI record.
    KpiRecord step() {
        const std::vector<TxRejection> rejections = ledger_.step(policies_, noise_);
        if (!rejections.empty()) {
            throw EconomyError("economy transaction rejected: " +
                               rejections.front().result.detail);
        }
        ++day_;

        const GlobalState& state = ledger_.state();
        const Block& block = ledger_.log().back();

        double disbursed = 0.0;
        bool settled = false;
        double fees_due = 0.0;
        for (const Transaction& tx : block.txs) {
            if (tx.mechanism == mech::kDisburse) {
                disbursed = tx.action.as<DisburseAction>().amount;
            } else if (tx.mechanism == mech::kSettle) {
                settled = true;
                fees_due = tx.action.as<SettleAction>().fees_xns_due;
            }
        }

        // Mirror the ledger flows through the SubsidyPool bookkeeping; the
        // arithmetic matches the transitions bit-for-bit.
        pool_book_.balance -= disbursed;
        pool_book_.cumulative_disbursed += disbursed;
        double paid = 0.0;
        if (settled) {
            paid = state.value(accounts::kMarket, vars::kPaidFees);
            const FeeSplit split = split_fee_credits(paid, params_.platform_fee_rate);
            pool_book_ = pool_replenish(pool_book_, split.platform_credit).pool;
            if (fees_due > paid) shortfall_xns_ += fees_due - paid;
        }
        if (pool_book_.balance != state.value(accounts::kPool, vars::kBalance)) {
            throw EconomyError("subsidy pool bookkeeping diverged from ledger");
        }

        KpiRecord rec;
        rec.t = day_;
        rec.pool_balance_xns = pool_book_.balance;
        rec.cum_subsidy_xns = pool_book_.cumulative_disbursed;
        rec.price_usd = state.value(accounts::kMarket, vars::kPrice);
        cum_subsidy_usd_ += disbursed * rec.price_usd;
        rec.cum_subsidy_usd = cum_subsidy_usd_;
        rec.treasury_xns = state.value(accounts::kTreasury, vars::kBalance);
        rec.treasury_usd = rec.treasury_xns * rec.price_usd;
        rec.n_developers = state.value(accounts::kMarket, vars::kDevelopers);
        rec.n_users = state.value(accounts::kMarket, vars::kUsers);
        rec.fees_usd = state.value(accounts::kMarket, vars::kFeesUsd);
        return rec;
    }

    const Ledger& ledger() const noexcept { return ledger_; }
    Ledger& ledger() noexcept { return ledger_; }
    const SubsidyPool& pool() const noexcept { return pool_book_; }
    const EconomyParams& params() const noexcept { return params_; }
    const EconomyToggles& toggles() const noexcept { return toggles_; }
    std::span<const Policy> policies() const noexcept { return policies_; }
    std::int64_t day() const noexcept { return day_; }
    double shortfall_xns() const noexcept { return shortfall_xns_; }

    /// Sum of every token-unit variable; conserved at total_supply.
    double total_xns() const noexcept { return ledger_.state().total(Unit::Xns); }

private:
    GlobalState make_genesis_state(double initial_pool_xns) const {
        const AddressId op = accounts::kTreasury;
        GlobalState genesis;
        genesis.declare({accounts::kTreasury, op, std::string(vars::kBalance), Unit::Xns,
                         params_.total_supply - initial_pool_xns});
        genesis.declare({accounts::kPool, op, std::string(vars::kBalance), Unit::Xns,
                         initial_pool_xns});
        genesis.declare({accounts::kPool, op, std::string(vars::kEscrow), Unit::Xns, 0.0});
        genesis.declare({accounts::kProvider, op, std::string(vars::kBalance), Unit::Xns, 0.0});
        genesis.declare({accounts::kMarket, op, std::string(vars::kPrice), Unit::Usd,
                         params_.price_floor});
        genesis.declare({accounts::kMarket, op, std::string(vars::kDemandEma), Unit::Usd, 0.0});
        genesis.declare({accounts::kMarket, op, std::string(vars::kUsers), Unit::Count, 0.0});
        genesis.declare({accounts::kMarket, op, std::string(vars::kApps), Unit::Count, 0.0});
        genesis.declare({accounts::kMarket, op, std::string(vars::kDevelopers), Unit::Count, 0.0});
        genesis.declare({accounts::kMarket, op, std::string(vars::kFeesUsd), Unit::Usd, 0.0});
        genesis.declare({accounts::kMarket, op, std::string(vars::kPaidFees), Unit::Count, 0.0});
        return genesis;
    }

    MechanismSet make_mechanism_set() const {
        MechanismSet mechs;
        mechs.register_mechanism(make_disburse_mechanism());
        mechs.register_mechanism(make_onboard_mechanism());
        mechs.register_mechanism(make_usage_mechanism(params_.user_carrying_capacity));
        mechs.register_mechanism(make_settle_mechanism(params_.platform_fee_rate,
                                                       toggles_.replenish));
        mechs.register_mechanism(make_market_mechanism(params_));
        return mechs;
    }

    std::vector<Policy> make_policies(double decay_rate) const {
        std::vector<Policy> policies;
        const AddressId op = accounts::kTreasury;

        // 1. Daily subsidy release. Observes only the pool's local state.
        {
            Policy p;
            p.agent = op;
            p.mechanism = std::string(mech::kDisburse);
            p.observes = [](const StateVar& sv) { return sv.owner == accounts::kPool; };
            p.private_params = decay_rate;
            p.strategy = [](const StateView& view, const std::any& priv,
                            RngStream&) -> std::optional<Action> {
                const double balance = view.value(accounts::kPool, vars::kBalance);
                if (!(balance > 0.0)) return std::nullopt;
                SubsidyPool pool;
                pool.balance = balance;
                pool.decay_rate = std::any_cast<double>(priv);
                const double amount = pool_disburse(pool).amount;
                if (!(amount > 0.0)) return std::nullopt;
                return Action(DisburseAction{amount});
            };
            policies.push_back(std::move(p));
        }

        if (toggles_.behavior) {
            // 2. Developer arrivals, pulled by the USD value of today's
            // subsidy. Noise off swaps the Poisson draw for a deterministic
            // fractional accumulator with the same mean.
            {
                struct ArrivalParams {
                    double base_rate;
                    double attractiveness;
                    double usd_scale;
                    double decay_rate;
                    bool noisy;
                    std::shared_ptr<double> carry;  // private signal state
                };
                Policy p;
                p.agent = op;
                p.mechanism = std::string(mech::kOnboard);
                p.observes = [](const StateVar& sv) {
                    return (sv.owner == accounts::kPool && sv.name == vars::kBalance) ||
                           (sv.owner == accounts::kMarket && sv.name == vars::kPrice);
                };
                p.private_params = ArrivalParams{
                    params_.dev_arrival_base_rate, params_.dev_attractiveness_coeff,
                    params_.dev_usd_scale,         decay_rate,
                    toggles_.noise,                std::make_shared<double>(0.0)};
                p.strategy = [](const StateView& view, const std::any& priv,
                                RngStream& rng) -> std::optional<Action> {
                    const auto& ap = std::any_cast<const ArrivalParams&>(priv);
                    const double balance = view.value(accounts::kPool, vars::kBalance);
                    const double price = view.value(accounts::kMarket, vars::kPrice);
                    SubsidyPool pool;
                    pool.balance = balance;
                    pool.decay_rate = ap.decay_rate;
                    const double subsidy_usd = pool_disburse(pool).amount * price;
                    const double mu =
                        ap.base_rate * (1.0 + ap.attractiveness * subsidy_usd / ap.usd_scale);
                    std::int64_t count = 0;
                    if (ap.noisy) {
                        count = developer_arrivals(mu, rng);
                    } else {
                        *ap.carry += mu;
                        count = static_cast<std::int64_t>(*ap.carry);
                        *ap.carry -= static_cast<double>(count);
                    }
                    if (count < 1) return std::nullopt;
                    return Action(OnboardAction{count});
                };
                policies.push_back(std::move(p));
            }

            // 3. Logistic user growth from the deployed application count.
            {
                Policy p;
                p.agent = op;
                p.mechanism = std::string(mech::kUsage);
                p.observes = [](const StateVar& sv) {
                    return sv.owner == accounts::kMarket &&
                           (sv.name == vars::kUsers || sv.name == vars::kApps);
                };
                p.private_params = params_;
                p.strategy = [](const StateView& view, const std::any& priv,
                                RngStream&) -> std::optional<Action> {
                    const auto& params = std::any_cast<const EconomyParams&>(priv);
                    const double users = view.value(accounts::kMarket, vars::kUsers);
                    const double apps = view.value(accounts::kMarket, vars::kApps);
                    const double users_new = update_users(users, apps, params);
                    if (users_new == users) return std::nullopt;
                    return Action(UsageAction{users_new});
                };
                policies.push_back(std::move(p));
            }

            // 4. Fee settlement: today's resource fees, valued at the last
            // market price.
            {
                Policy p;
                p.agent = op;
                p.mechanism = std::string(mech::kSettle);
                p.observes = [](const StateVar& sv) {
                    return sv.owner == accounts::kMarket &&
                           (sv.name == vars::kUsers || sv.name == vars::kPrice);
                };
                p.private_params = params_;
                p.strategy = [](const StateView& view, const std::any& priv,
                                RngStream&) -> std::optional<Action> {
                    const auto& params = std::any_cast<const EconomyParams&>(priv);
                    const double users = view.value(accounts::kMarket, vars::kUsers);
                    const double fees_usd = compute_fees(users, params);
                    if (!(fees_usd > 0.0)) return std::nullopt;
                    const double price = view.value(accounts::kMarket, vars::kPrice);
                    if (!(price > 0.0)) {
                        throw EconomyError("fee settlement with non-positive price");
                    }
                    return Action(SettleAction{fees_usd, fees_usd / price});
                };
                policies.push_back(std::move(p));
            }
        }

        // 5. Market update runs every day so the price series is total.
        {
            struct MarketParams {
                double sigma;
                bool noisy;
            };
            Policy p;
            p.agent = op;
            p.mechanism = std::string(mech::kMarket);
            p.observes = [](const StateVar& sv) { return sv.owner == accounts::kMarket; };
            p.private_params = MarketParams{params_.demand_sigma, toggles_.noise};
            p.strategy = [](const StateView&, const std::any& priv,
                            RngStream& rng) -> std::optional<Action> {
                const auto& mp = std::any_cast<const MarketParams&>(priv);
                const double factor = mp.noisy ? rng.lognormal_factor(mp.sigma) : 1.0;
                return Action(MarketAction{factor});
            };
            policies.push_back(std::move(p));
        }

        return policies;
    }

    EconomyParams params_;
    EconomyToggles toggles_;
    EnvNoise noise_;
    Ledger ledger_;
    std::vector<Policy> policies_;
    SubsidyPool pool_book_;
    double cum_subsidy_usd_ = 0.0;
    double shortfall_xns_ = 0.0;
    std::int64_t day_ = 0;
};

}  // namespace tokensim
