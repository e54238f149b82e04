#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xtrace/single_trace.hpp"

namespace xtrace {

/**
 * Investigation milestones, in standard-operating-procedure order. The
 * belief state tracks their completion; a milestone bit only ever flips
 * false -> true.
 */
enum class Milestone : int {
    target_resolved = 0,
    window_computed,
    prices_resolved,
    candidates_retrieved,
    validation_passed,
    scoring_completed,
};

inline constexpr int kMilestoneCount = 6;

inline const char* milestone_name(Milestone m) {
    switch (m) {
        case Milestone::target_resolved: return "TargetResolved";
        case Milestone::window_computed: return "WindowComputed";
        case Milestone::prices_resolved: return "PricesResolved";
        case Milestone::candidates_retrieved: return "CandidatesRetrieved";
        case Milestone::validation_passed: return "ValidationPassed";
        case Milestone::scoring_completed: return "ScoringCompleted";
    }
    return "unknown";
}

enum class ActionKind {
    resolve_target,
    compute_window,
    lookup_prices,
    search_candidates,
    validate,
    score,
    terminate,
};

inline const char* action_kind_name(ActionKind k) {
    switch (k) {
        case ActionKind::resolve_target: return "ResolveTarget";
        case ActionKind::compute_window: return "ComputeWindow";
        case ActionKind::lookup_prices: return "LookupPrices";
        case ActionKind::search_candidates: return "SearchCandidates";
        case ActionKind::validate: return "Validate";
        case ActionKind::score: return "Score";
        case ActionKind::terminate: return "Terminate";
    }
    return "unknown";
}

// Every non-terminate action is tied to exactly one milestone.
inline std::optional<Milestone> milestone_for(ActionKind kind) {
    switch (kind) {
        case ActionKind::resolve_target: return Milestone::target_resolved;
        case ActionKind::compute_window: return Milestone::window_computed;
        case ActionKind::lookup_prices: return Milestone::prices_resolved;
        case ActionKind::search_candidates: return Milestone::candidates_retrieved;
        case ActionKind::validate: return Milestone::validation_passed;
        case ActionKind::score: return Milestone::scoring_completed;
        case ActionKind::terminate: return std::nullopt;
    }
    return std::nullopt;
}

/// Fixed-length boolean milestone vector with monotone transitions plus an
/// append-only note log.
class BeliefState {
public:
    bool bit(Milestone m) const { return bits_[static_cast<int>(m)]; }

    bool all_true() const {
        for (bool b : bits_)
            if (!b) return false;
        return true;
    }

    std::string bits_string() const {
        std::string s;
        for (bool b : bits_) s.push_back(b ? '1' : '0');
        return s;
    }

    int step_count() const { return step_count_; }
    const std::vector<std::string>& notes() const { return notes_; }

    void append_note(std::string note) { notes_.push_back(std::move(note)); }
    void count_step() { ++step_count_; }

    // Test seam: prepare a belief with some milestones already complete.
    void force_bit(Milestone m) { bits_[static_cast<int>(m)] = true; }

private:
    friend BeliefState accept_finding(BeliefState belief, const struct Finding& finding);
    std::array<bool, kMilestoneCount> bits_{};
    int step_count_ = 0;
    std::vector<std::string> notes_;
};

struct Action {
    ActionKind kind = ActionKind::terminate;
    std::map<std::string, std::string> brief;  // task parameters

    std::string brief_digest() const {
        std::string s;
        for (const auto& [k, v] : brief) {
            if (!s.empty()) s.push_back(';');
            s += k + "=" + v;
        }
        return s;
    }
};

enum class FindingStatus { pending, accepted, rejected };

inline const char* finding_status_name(FindingStatus s) {
    switch (s) {
        case FindingStatus::pending: return "pending";
        case FindingStatus::accepted: return "accepted";
        case FindingStatus::rejected: return "rejected";
    }
    return "unknown";
}

struct Finding {
    ActionKind source_action = ActionKind::terminate;
    std::string summary;  // operation output digest or failure rationale
    FindingStatus status = FindingStatus::pending;
};

// Acceptance-gated belief transition: flips the milestone bit of an accepted
// finding. Accepting a finding for an already-complete milestone is a
// protocol violation.
inline BeliefState accept_finding(BeliefState belief, const Finding& finding) {
    if (finding.status != FindingStatus::accepted) {
        throw ProtocolViolationError("acceptFinding requires an accepted finding");
    }
    std::optional<Milestone> milestone = milestone_for(finding.source_action);
    if (!milestone) {
        throw ProtocolViolationError("terminate findings carry no milestone");
    }
    int index = static_cast<int>(*milestone);
    if (belief.bits_[index]) {
        throw ProtocolViolationError(std::string("milestone already complete: ") +
                                     milestone_name(*milestone));
    }
    belief.bits_[index] = true;
    belief.append_note(std::string(action_kind_name(finding.source_action)) + ": " +
                       finding.summary);
    return belief;
}

/**
 * Strategic decision interface. Implementations must never emit an action
 * whose milestone is already complete, and must emit Terminate once every
 * bit is true.
 */
class Policy {
public:
    virtual ~Policy() = default;
    virtual Action decide(const BeliefState& belief, const std::vector<Finding>& findings) = 0;
};

struct TraceEnvironment {
    const TransferStore* store = nullptr;
    const PriceBook* prices = nullptr;
    TraceConfig config;
    TransferRef target;
};

struct TranscriptEntry {
    int step = 0;
    std::string belief_bits;  // before the action executed
    ActionKind action = ActionKind::terminate;
    std::string brief_digest;
    FindingStatus status = FindingStatus::pending;
    std::string note;
};

struct LoopOutcome {
    bool completed = false;
    std::optional<TraceResult> result;
    std::string failure_reason;
    BeliefState belief;
    std::vector<TranscriptEntry> transcript;
};

/**
 * Deterministic stand-in for the strategic core: pick the lowest-index
 * incomplete milestone, issue its action, and allow one retry tier per
 * milestone (doubled backward window for the candidate search, doubled
 * validation window for validation) before giving up.
 */
class HeuristicPolicy : public Policy {
public:
    HeuristicPolicy(TransferRef target, const TraceConfig& config)
        : target_(std::move(target)), config_(config) {}

    Action decide(const BeliefState& belief, const std::vector<Finding>& findings) override {
        if (belief.all_true()) return Action{ActionKind::terminate, {}};

        ActionKind kind = next_action_kind(belief);
        int attempts = 0;
        const Finding* last = nullptr;
        for (const Finding& f : findings) {
            if (f.source_action == kind) {
                ++attempts;
                last = &f;
            }
        }
        if (attempts == 0) return make_brief(kind, 1);
        if (last->status == FindingStatus::rejected && attempts == 1 && has_retry_tier(kind)) {
            return make_brief(kind, 2);
        }
        // Retry tier exhausted: report failure by terminating.
        return Action{ActionKind::terminate,
                      {{"reason", std::string("milestone failed: ") +
                                      milestone_name(*milestone_for(kind))}}};
    }

    // Effective overrides the operational core applies for a given brief.
    static TraceConfig apply_brief(const TraceConfig& base, const Action& action) {
        TraceConfig cfg = base;
        auto it = action.brief.find("backward_window");
        if (it != action.brief.end()) cfg.backward_window = std::stoll(it->second);
        it = action.brief.find("tight_half_window");
        if (it != action.brief.end()) cfg.tight_half_window = std::stoll(it->second);
        return cfg;
    }

private:
    static ActionKind next_action_kind(const BeliefState& belief) {
        static constexpr ActionKind order[] = {
            ActionKind::resolve_target,    ActionKind::compute_window, ActionKind::lookup_prices,
            ActionKind::search_candidates, ActionKind::validate,       ActionKind::score,
        };
        for (ActionKind kind : order) {
            if (!belief.bit(*milestone_for(kind))) return kind;
        }
        return ActionKind::terminate;
    }

    static bool has_retry_tier(ActionKind kind) {
        return kind == ActionKind::search_candidates || kind == ActionKind::validate;
    }

    Action make_brief(ActionKind kind, int attempt) const {
        Action action;
        action.kind = kind;
        action.brief["target"] = target_.tx_id;
        action.brief["chain"] = target_.chain.id;
        action.brief["attempt"] = std::to_string(attempt);
        if (kind == ActionKind::search_candidates && attempt == 2) {
            action.brief["backward_window"] = std::to_string(config_.backward_window * 2);
        }
        if (kind == ActionKind::validate && attempt == 2) {
            action.brief["tight_half_window"] = std::to_string(config_.tight_half_window * 2);
        }
        return action;
    }

    TransferRef target_;
    TraceConfig config_;
};

namespace detail {

// Working memory of one investigation; the operational core fills it in as
// actions execute.
struct InvestigationContext {
    const Transfer* target = nullptr;
    std::optional<TemporalWindow> window;
    int priced_pairs = 0;
    std::vector<PairNote> warnings;
    std::vector<const Transfer*> candidates;
    TraceConfig candidate_config;  // config the accepted candidate set was generated under
    TraceConfig validate_config;   // config validation ran under
    bool validated = false;
    int accepted_candidates = 0;
    std::optional<TraceResult> result;
};

// Operational core: execute one task brief against the environment.
// Evaluative core: the acceptance rules baked into each branch.
inline Finding execute_action(const Action& action, const TraceEnvironment& env,
                              InvestigationContext& ctx) {
    Finding finding;
    finding.source_action = action.kind;
    const TransferStore& store = *env.store;
    const PriceBook& prices = *env.prices;
    TraceConfig cfg = HeuristicPolicy::apply_brief(env.config, action);
    try {
        switch (action.kind) {
            case ActionKind::resolve_target: {
                ctx.target = &store.resolve(env.target);
                finding.summary = "resolved " + env.target.str();
                finding.status = FindingStatus::accepted;
                break;
            }
            case ActionKind::compute_window: {
                ctx.window = temporal_window(*ctx.target, cfg);
                finding.summary = "window [" + std::to_string(ctx.window->lo) + ", " +
                                  std::to_string(ctx.window->hi) + "]";
                finding.status = FindingStatus::accepted;
                break;
            }
            case ActionKind::lookup_prices: {
                ctx.priced_pairs = 0;
                for (const SourcePair& pair : cfg.source_pairs) {
                    const PriceSeries* series = prices.find(pair.asset, ctx.target->asset);
                    if (!series) continue;
                    try {
                        series->range_over(ctx.window->lo, ctx.window->hi);
                        ++ctx.priced_pairs;
                    } catch (const PriceOutOfRangeError&) {
                    }
                }
                finding.summary = std::to_string(ctx.priced_pairs) + " source pairs priced";
                finding.status =
                    ctx.priced_pairs > 0 ? FindingStatus::accepted : FindingStatus::rejected;
                if (ctx.priced_pairs == 0) finding.summary += "; no usable price coverage";
                break;
            }
            case ActionKind::search_candidates: {
                ctx.warnings.clear();
                ctx.candidates = generate_candidates(store, prices, *ctx.target, cfg,
                                                     &ctx.warnings);
                ctx.candidate_config = cfg;
                finding.summary = std::to_string(ctx.candidates.size()) + " candidates";
                finding.status = ctx.candidates.empty() ? FindingStatus::rejected
                                                        : FindingStatus::accepted;
                if (ctx.candidates.empty()) finding.summary += "; empty search result";
                break;
            }
            case ActionKind::validate: {
                // Keep the candidate-set config except for the widened
                // validation window carried by the brief.
                TraceConfig vcfg = ctx.candidate_config;
                vcfg.tight_half_window = cfg.tight_half_window;
                ctx.accepted_candidates = 0;
                for (const Transfer* c : ctx.candidates) {
                    if (validate_forward(*c, *ctx.target, prices, vcfg).accepted) {
                        ++ctx.accepted_candidates;
                    }
                }
                ctx.validate_config = vcfg;
                ctx.validated = true;
                finding.summary = std::to_string(ctx.accepted_candidates) + " of " +
                                  std::to_string(ctx.candidates.size()) + " candidates valid";
                finding.status = ctx.accepted_candidates > 0 ? FindingStatus::accepted
                                                             : FindingStatus::rejected;
                break;
            }
            case ActionKind::score: {
                ctx.result = detail::score_and_rank(ctx.candidates, *ctx.target, prices,
                                                    ctx.validate_config, ctx.warnings);
                finding.summary =
                    "scored " + std::to_string(ctx.result->candidates.size()) + " links";
                finding.status = FindingStatus::accepted;
                break;
            }
            case ActionKind::terminate:
                throw InternalError("terminate is not executable");
        }
    } catch (const Error& e) {
        finding.status = FindingStatus::rejected;
        finding.summary = e.what();
    }
    return finding;
}

}  // namespace detail

/**
 * Perception-Reasoning-Action loop over the milestone belief state. Every
 * executed action is transcribed; pruned actions (milestone already true)
 * and repeated identical briefs are hard protocol violations. The loop ends
 * on ScoringCompleted, on policy Terminate, or when the step budget runs out.
 */
inline LoopOutcome step_loop(Policy& policy, const TraceEnvironment& env, BeliefState belief,
                             int budget) {
    if (budget < 1) throw ConfigError("step budget must be >= 1");
    env.config.validate();

    LoopOutcome outcome;
    detail::InvestigationContext ctx;
    std::vector<Finding> findings;
    std::set<std::pair<ActionKind, std::string>> issued;

    for (;;) {
        // Perceive: findings so far. Reason/Act: the policy decides.
        Action action = policy.decide(belief, findings);
        if (action.kind == ActionKind::terminate) {
            outcome.completed = belief.bit(Milestone::scoring_completed);
            outcome.result = ctx.result;
            if (!outcome.completed) {
                auto it = action.brief.find("reason");
                outcome.failure_reason =
                    it != action.brief.end() ? it->second : "terminated before scoring";
            }
            outcome.transcript.push_back({belief.step_count(), belief.bits_string(), action.kind,
                                          action.brief_digest(), FindingStatus::pending,
                                          outcome.completed ? "complete" : outcome.failure_reason});
            break;
        }

        std::optional<Milestone> milestone = milestone_for(action.kind);
        if (belief.bit(*milestone)) {
            throw ProtocolViolationError(std::string("pruned action issued: ") +
                                         action_kind_name(action.kind));
        }
        for (int i = 0; i < static_cast<int>(*milestone); ++i) {
            if (!belief.bit(static_cast<Milestone>(i))) {
                throw ProtocolViolationError(std::string("premature step: ") +
                                             action_kind_name(action.kind) + " before " +
                                             milestone_name(static_cast<Milestone>(i)));
            }
        }
        if (!issued.insert({action.kind, action.brief_digest()}).second) {
            throw ProtocolViolationError(std::string("redundant brief for ") +
                                         action_kind_name(action.kind));
        }
        if (belief.step_count() >= budget) {
            outcome.completed = false;
            outcome.failure_reason = "step budget exhausted";
            outcome.belief = belief;
            return outcome;
        }

        std::string bits_before = belief.bits_string();
        Finding finding = detail::execute_action(action, env, ctx);
        belief.count_step();
        outcome.transcript.push_back({belief.step_count(), bits_before, action.kind,
                                      action.brief_digest(), finding.status, finding.summary});
        if (finding.status == FindingStatus::accepted) {
            belief = accept_finding(belief, finding);
        }
        findings.push_back(finding);

        if (belief.bit(Milestone::scoring_completed)) {
            outcome.completed = true;
            outcome.result = ctx.result;
            break;
        }
    }
    outcome.belief = belief;
    return outcome;
}

}  // namespace xtrace
