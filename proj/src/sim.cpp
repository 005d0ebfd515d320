// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "puflab/attest.hpp"
#include "puflab/auth.hpp"
#include "puflab/errors.hpp"

namespace puflab::sim {

namespace {

struct ModeName {
    AdversaryMode mode;
    std::string_view name;
};
constexpr ModeName kModes[] = {
    {AdversaryMode::None, "none"},       {AdversaryMode::Passive, "passive"},
    {AdversaryMode::Replay, "replay"},   {AdversaryMode::BitFlip, "bitflip"},
    {AdversaryMode::Drop, "drop"},       {AdversaryMode::Modify, "modify"},
    {AdversaryMode::Inject, "inject"},
};

struct RuleName {
    ModifyRule rule;
    std::string_view name;
};
constexpr RuleName kRules[] = {
    {ModifyRule::FlipMac, "flip-mac"},
    {ModifyRule::SpliceMasked, "splice-masked"},
    {ModifyRule::BumpCounter, "bump-counter"},
    {ModifyRule::ForgeReply, "forge-reply"},
    {ModifyRule::FlipMemoryByte, "flip-memory-byte"},
    {ModifyRule::Relocate, "relocate"},
    {ModifyRule::FlipReportBit, "flip-report-bit"},
};

void flip_bit(Bytes &b, RandomStream &rng) {
    const auto bit = rng.uniform_below(b.size() * 8);
    b[bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
}

} // namespace

std::string_view to_string(AdversaryMode mode) {
    for (const auto &m : kModes)
        if (m.mode == mode)
            return m.name;
    return "?";
}

AdversaryMode parse_adversary_mode(std::string_view name) {
    for (const auto &m : kModes)
        if (m.name == name)
            return m.mode;
    throw ValidationError("unknown adversary mode '" + std::string(name) + "'");
}

std::string_view to_string(ModifyRule rule) {
    for (const auto &r : kRules)
        if (r.rule == rule)
            return r.name;
    return "?";
}

ModifyRule parse_modify_rule(std::string_view name) {
    for (const auto &r : kRules)
        if (r.name == name)
            return r.rule;
    throw ValidationError("unknown modify rule '" + std::string(name) + "'");
}

std::string_view to_string(Direction direction) {
    return direction == Direction::ToVerifier ? "to-verifier" : "to-device";
}

std::string_view to_string(Protocol protocol) {
    return protocol == Protocol::Auth ? "auth" : "attest";
}

void AdversaryPolicy::validate() const {
    if (!(probability >= 0.0 && probability <= 1.0))
        throw ValidationError("adversary probability must lie in [0, 1]");
    if (mode == AdversaryMode::Inject && injections == 0)
        throw ValidationError("inject adversary needs injections >= 1");
    if (!(relocation_overhead >= 1.0) || !std::isfinite(relocation_overhead))
        throw ValidationError("relocation overhead must be finite and >= 1");
}

// ---------------------------------------------------------------------------

Channel::Channel(AdversaryPolicy policy, RandomStream rng, std::uint64_t latency)
    : policy_(policy), rng_(std::move(rng)), latency_(latency) {
    policy_.validate();
}

std::size_t Channel::record_action(std::size_t trial, Direction direction, std::string kind,
                                   std::string detail) {
    AdversaryAction a;
    a.id = log_.size();
    a.trial = trial;
    a.time = now_;
    a.direction = direction;
    a.kind = std::move(kind);
    a.detail = std::move(detail);
    log_.push_back(std::move(a));
    return log_.back().id;
}

Envelope Channel::deliver(Direction direction, Bytes payload, std::optional<std::size_t> action) {
    now_ += latency_;
    std::uint8_t tag = direction == Direction::ToVerifier ? 0 : 1;
    Bytes len;
    put_be32(len, static_cast<std::uint32_t>(payload.size()));
    transcript_.update(std::span<const std::uint8_t>(&tag, 1)).update(len).update(payload);
    return Envelope{direction, std::move(payload), now_, action};
}

crypto::Digest Channel::transcript_digest() {
    // Finishing consumes the running context, so restart it with the digest
    // so far to keep accumulating.
    auto d = transcript_.finish();
    transcript_.update(d);
    return d;
}

Bytes Channel::forge(std::size_t trial, Direction direction, const Bytes &payload,
                     std::size_t index, std::size_t &action) {
    const auto &past = history(direction);
    Bytes out;
    std::string kind;
    std::string detail;
    switch (index % 3) {
    case 0:
        if (!past.empty()) {
            const auto pick = rng_.uniform_below(past.size());
            out = past[pick];
            kind = "inject:replay";
            detail = "message " + std::to_string(pick);
            break;
        }
        [[fallthrough]];
    case 1: {
        std::vector<std::size_t> same;
        for (std::size_t i = 0; i < past.size(); ++i)
            if (past[i].size() == payload.size())
                same.push_back(i);
        if (!same.empty()) {
            const auto pick = same[rng_.uniform_below(same.size())];
            auto a = rng_.uniform_below(payload.size());
            auto b = rng_.uniform_below(payload.size());
            if (a > b)
                std::swap(a, b);
            out = payload;
            std::copy(past[pick].begin() + static_cast<long>(a),
                      past[pick].begin() + static_cast<long>(b) + 1,
                      out.begin() + static_cast<long>(a));
            kind = "inject:splice";
            detail = "bytes [" + std::to_string(a) + "," + std::to_string(b) + "] from message " +
                     std::to_string(pick);
            break;
        }
        [[fallthrough]];
    }
    default:
        out = payload;
        flip_bit(out, rng_);
        kind = "inject:flip";
        break;
    }
    if (out == payload) {
        flip_bit(out, rng_);
        detail += detail.empty() ? "forced flip" : "; forced flip";
    }
    action = record_action(trial, direction, kind, detail);
    return out;
}

std::vector<Envelope> Channel::transmit(std::size_t trial, Direction direction,
                                        const Bytes &payload) {
    std::vector<Envelope> out;
    if (policy_.mode == AdversaryMode::None) {
        out.push_back(deliver(direction, payload, std::nullopt));
        return out;
    }
    if (policy_.harvest)
        harvested_.push_back(payload);

    switch (policy_.mode) {
    case AdversaryMode::None:
    case AdversaryMode::Passive:
        out.push_back(deliver(direction, payload, std::nullopt));
        break;
    case AdversaryMode::Replay: {
        out.push_back(deliver(direction, payload, std::nullopt));
        const auto &past = history(direction);
        for (std::size_t i = 0; i < past.size(); ++i) {
            auto id = record_action(trial, direction, "replay", "message " + std::to_string(i));
            out.push_back(deliver(direction, past[i], id));
        }
        break;
    }
    case AdversaryMode::BitFlip:
        if (!payload.empty() && rng_.bernoulli(policy_.probability)) {
            Bytes m = payload;
            flip_bit(m, rng_);
            auto id = record_action(trial, direction, "bitflip", "");
            out.push_back(deliver(direction, std::move(m), id));
        } else {
            out.push_back(deliver(direction, payload, std::nullopt));
        }
        break;
    case AdversaryMode::Drop:
        if (rng_.bernoulli(policy_.probability))
            record_action(trial, direction, "drop", "");
        else
            out.push_back(deliver(direction, payload, std::nullopt));
        break;
    case AdversaryMode::Modify: {
        std::optional<Bytes> m;
        if (rewriter_)
            m = rewriter_(direction, payload, history(direction), rng_);
        if (m && *m != payload) {
            auto id = record_action(trial, direction,
                                    "modify:" + std::string(to_string(policy_.rule)), "");
            out.push_back(deliver(direction, std::move(*m), id));
        } else {
            out.push_back(deliver(direction, payload, std::nullopt));
        }
        break;
    }
    case AdversaryMode::Inject:
        // Forgeries towards the device would end its pending session, so
        // injection targets the verifier only.
        if (direction == Direction::ToVerifier && !payload.empty()) {
            for (std::size_t k = 0; k < policy_.injections; ++k) {
                std::size_t id = 0;
                Bytes f = forge(trial, direction, payload, k, id);
                out.push_back(deliver(direction, std::move(f), id));
            }
        }
        out.push_back(deliver(direction, payload, std::nullopt));
        break;
    }
    history(direction).push_back(payload);
    return out;
}

// ---------------------------------------------------------------------------

void ScenarioConfig::validate() const {
    adversary.validate();
    if (trials == 0)
        throw ValidationError("scenario: trials must be at least 1");
    device.validate();
    if (device.kind == PufKind::SramWeak)
        throw ValidationError("scenario: protocols need a challengeable device");
    if (protocol == Protocol::Attest) {
        if (memory_size == 0 || chunk_size == 0)
            throw ValidationError("scenario: memory and chunk size must be positive");
        if (!(budget_factor >= 1.0) || !std::isfinite(budget_factor))
            throw ValidationError("scenario: budget factor must be finite and >= 1");
    }
    const bool auth_rule = adversary.rule == ModifyRule::FlipMac ||
                           adversary.rule == ModifyRule::SpliceMasked ||
                           adversary.rule == ModifyRule::BumpCounter ||
                           adversary.rule == ModifyRule::ForgeReply;
    if (adversary.mode == AdversaryMode::Modify && auth_rule != (protocol == Protocol::Auth))
        throw ValidationError("scenario: rule '" + std::string(to_string(adversary.rule)) +
                              "' does not apply to protocol " + std::string(to_string(protocol)));
}

KeyValueDoc ScenarioConfig::to_kv() const {
    KeyValueDoc doc;
    doc.set("protocol", std::string(to_string(protocol)));
    doc.set("adversary", std::string(to_string(adversary.mode)));
    doc.set("probability", adversary.probability);
    doc.set("rule", std::string(to_string(adversary.rule)));
    doc.set("injections", adversary.injections);
    doc.set("relocation_overhead", adversary.relocation_overhead);
    doc.set("harvest", adversary.harvest ? "true" : "false");
    doc.set("trials", trials);
    doc.set("seed", seed);
    doc.set("memory_size", memory_size);
    doc.set("chunk_size", chunk_size);
    doc.set("budget_factor", budget_factor);
    const auto device_doc = device.to_kv();
    for (const auto &[k, v] : device_doc.entries())
        doc.set("device." + k, v);
    return doc;
}

ScenarioConfig ScenarioConfig::from_kv(const KeyValueDoc &doc) {
    static const char *known[] = {"protocol", "adversary",   "probability", "rule",
                                  "injections", "relocation_overhead", "harvest",
                                  "trials",   "seed",        "memory_size", "chunk_size",
                                  "budget_factor"};
    KeyValueDoc device_doc;
    for (const auto &[k, v] : doc.entries()) {
        if (k.rfind("device.", 0) == 0)
            device_doc.set(k.substr(7), v);
        else if (std::find(std::begin(known), std::end(known), k) == std::end(known))
            throw ValidationError("unknown scenario key '" + k + "'");
    }
    ScenarioConfig c;
    const auto protocol = doc.get_or("protocol", "auth");
    if (protocol == "auth")
        c.protocol = Protocol::Auth;
    else if (protocol == "attest")
        c.protocol = Protocol::Attest;
    else
        throw ValidationError("unknown protocol '" + protocol + "'");
    c.adversary.mode = parse_adversary_mode(doc.get_or("adversary", "passive"));
    c.adversary.probability = doc.get_double_or("probability", c.adversary.probability);
    if (auto rule = doc.find("rule"))
        c.adversary.rule = parse_modify_rule(*rule);
    else if (c.protocol == Protocol::Attest)
        c.adversary.rule = ModifyRule::FlipMemoryByte;
    c.adversary.injections = doc.get_uint_or("injections", c.adversary.injections);
    c.adversary.relocation_overhead =
        doc.get_double_or("relocation_overhead", c.adversary.relocation_overhead);
    const auto harvest = doc.get_or("harvest", "false");
    if (harvest != "true" && harvest != "false")
        throw ValidationError("harvest must be 'true' or 'false'");
    c.adversary.harvest = harvest == "true";
    c.trials = doc.get_uint_or("trials", c.trials);
    c.seed = doc.get_uint_or("seed", c.seed);
    c.memory_size = doc.get_uint_or("memory_size", c.memory_size);
    c.chunk_size = doc.get_uint_or("chunk_size", c.chunk_size);
    c.budget_factor = doc.get_double_or("budget_factor", c.budget_factor);
    if (!device_doc.has("seed"))
        device_doc.set("seed", seed_hex(make_seed(c.seed)));
    c.device = PufConfig::from_kv(device_doc);
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------

namespace {

/// Per-trial bookkeeping shared by both protocols.
struct TrialTally {
    std::optional<std::string> honest_reject;
    std::optional<std::string> any_reject;
    bool success = false;
    bool untraced = false;

    void reject(const std::string &reason, bool tainted) {
        if (!tainted && !honest_reject)
            honest_reject = reason;
        if (!any_reject)
            any_reject = reason;
    }
    void tainted_accept(std::optional<std::size_t> action, const Channel &ch) {
        success = true;
        if (!action || *action >= ch.log().size())
            untraced = true;
    }
    std::string outcome(bool accepted) const {
        if (accepted)
            return "accepted";
        if (honest_reject)
            return *honest_reject;
        return any_reject.value_or("lost");
    }
};

void finish_trial(ScenarioReport &report, TrialRecord rec, const TrialTally &tally,
                  bool accepted) {
    rec.outcome = tally.outcome(accepted);
    rec.adversary_success = tally.success;
    if (accepted)
        ++report.accepts;
    else
        ++report.rejects[rec.outcome];
    report.adversary_successes += tally.success;
    report.untraced_successes += tally.untraced;
    report.recovered_sessions += rec.recovered;
    report.trial_log.push_back(std::move(rec));
}

Channel::Rewriter auth_rewriter(ModifyRule rule) {
    return [rule](Direction d, const Bytes &payload, const std::vector<Bytes> &past,
                  RandomStream &rng) -> std::optional<Bytes> {
        try {
            if (d == Direction::ToVerifier) {
                auto m = auth::AuthMessage1::parse(payload);
                switch (rule) {
                case ModifyRule::FlipMac:
                    m.mac[rng.uniform_below(m.mac.size())] ^=
                        static_cast<std::uint8_t>(1u << rng.uniform_below(8));
                    return m.serialize();
                case ModifyRule::SpliceMasked:
                    if (past.empty())
                        return std::nullopt;
                    m.masked = auth::AuthMessage1::parse(past.back()).masked;
                    return m.serialize();
                case ModifyRule::BumpCounter:
                    ++m.counter;
                    return m.serialize();
                default:
                    return std::nullopt;
                }
            }
            if (rule == ModifyRule::ForgeReply) {
                auto m = auth::AuthMessage2::parse(payload);
                auto fake = rng.bytes(m.mac.size());
                std::copy(fake.begin(), fake.end(), m.mac.begin());
                return m.serialize();
            }
        } catch (const ValidationError &) {
        }
        return std::nullopt;
    };
}

ScenarioReport run_auth(const ScenarioConfig &config) {
    const RandomStream root(config.seed);
    const auto puf = PufInstance::create(config.device);
    RandomStream enroll_noise = root.fork(10), enroll_rand = root.fork(11);
    auto initial = auth::enroll_initial_secret(puf, FuzzyExtractor(), enroll_noise, enroll_rand);
    auth::DeviceEndpoint device(puf, initial.clone(), root.fork(1), root.fork(2));
    auth::VerifierEndpoint verifier(std::move(initial), puf.challenge_bits());
    Channel channel(config.adversary, root.fork(3));
    if (config.adversary.mode == AdversaryMode::Modify)
        channel.set_rewriter(auth_rewriter(config.adversary.rule));

    ScenarioReport report;
    report.protocol = Protocol::Auth;
    report.mode = config.adversary.mode;
    report.trials = config.trials;

    for (std::size_t t = 0; t < config.trials; ++t) {
        TrialRecord rec;
        rec.trial = t;
        TrialTally tally;
        const std::size_t actions_before = channel.log().size();

        const auto msg1 = device.respond();
        struct Reply {
            Bytes wire;
            std::optional<std::size_t> origin; // taint of the msg1 it answers
            bool recovered;
        };
        std::vector<Reply> replies;
        for (auto &env : channel.transmit(t, Direction::ToVerifier, msg1.serialize())) {
            if (env.tainted())
                ++report.forged_messages;
            const auto verifier_counter = verifier.state().counter;
            auto outcome = verifier.check_device(env.payload);
            if (outcome.accepted()) {
                if (env.tainted()) {
                    ++report.forgeries_accepted;
                    tally.tainted_accept(env.action, channel);
                }
                bool recovered = false;
                if (!env.tainted())
                    recovered = msg1.counter < verifier_counter;
                replies.push_back({outcome.reply->serialize(), env.action, recovered});
            } else {
                tally.reject("verifier:" + std::string(auth::to_string(outcome.verdict)),
                             env.tainted());
            }
        }

        bool committed = false;
        for (const auto &reply : replies) {
            for (auto &env : channel.transmit(t, Direction::ToDevice, reply.wire)) {
                const bool tainted = env.tainted() || reply.origin.has_value();
                if (tainted)
                    ++report.forged_messages;
                if (device.state().status != auth::CommitStatus::PendingVerifier)
                    continue; // no session waiting for it
                auth::DeviceVerdict verdict;
                try {
                    verdict = device.check_verifier(auth::AuthMessage2::parse(env.payload));
                } catch (const ValidationError &) {
                    device.abort_session();
                    tally.reject("device:malformed", tainted);
                    continue;
                }
                if (verdict == auth::DeviceVerdict::Committed) {
                    if (tainted) {
                        ++report.forgeries_accepted;
                        tally.tainted_accept(env.action ? env.action : reply.origin, channel);
                    } else {
                        committed = true;
                        rec.recovered = reply.recovered;
                    }
                } else {
                    tally.reject("device:" + std::string(auth::to_string(verdict)), tainted);
                }
            }
        }
        if (device.state().status == auth::CommitStatus::PendingVerifier) {
            device.abort_session();
            if (replies.empty() && !tally.any_reject)
                tally.reject("lost:msg1", false);
            else if (!replies.empty())
                tally.reject("lost:msg2", false);
        }
        rec.adversary_actions = channel.log().size() - actions_before;
        finish_trial(report, std::move(rec), tally, committed);
    }

    const auto d = device.state();
    const auto v = verifier.state();
    report.final_in_sync = d.current_fingerprint == v.current_fingerprint ||
                           (v.previous_fingerprint && d.current_fingerprint == *v.previous_fingerprint);
    report.adversary_actions = channel.log().size();
    report.harvested_messages = channel.harvested().size();
    report.transcript = channel.transcript_digest();
    report.action_log = channel.log();
    return report;
}

ScenarioReport run_attest(const ScenarioConfig &config) {
    const RandomStream root(config.seed);
    const auto puf = PufInstance::create(config.device);
    crypto::Expander mem_rng("sim/memory", config.device.seed);
    attest::MemoryImage golden(mem_rng.bytes(config.memory_size), config.chunk_size);
    attest::AttestationVerifier verifier(golden, puf, config.budget_factor);
    RandomStream request_rng = root.fork(4), tamper_rng = root.fork(5);
    Channel channel(config.adversary, root.fork(3));
    const bool modify = config.adversary.mode == AdversaryMode::Modify;
    if (modify && config.adversary.rule == ModifyRule::FlipReportBit)
        channel.set_rewriter([](Direction d, const Bytes &payload, const std::vector<Bytes> &,
                                RandomStream &rng) -> std::optional<Bytes> {
            if (d != Direction::ToVerifier || payload.size() < 41)
                return std::nullopt;
            Bytes m = payload;
            const auto bit = rng.uniform_below(256);
            m[9 + bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (bit % 8));
            return m;
        });

    ScenarioReport report;
    report.protocol = Protocol::Attest;
    report.mode = config.adversary.mode;
    report.trials = config.trials;

    for (std::size_t t = 0; t < config.trials; ++t) {
        TrialRecord rec;
        rec.trial = t;
        TrialTally tally;
        const std::size_t actions_before = channel.log().size();
        bool accepted = false;

        const auto request = verifier.make_request(t + 1, request_rng);
        for (auto &req_env : channel.transmit(t, Direction::ToDevice, request.serialize())) {
            attest::AttestationRequest seen;
            try {
                seen = attest::AttestationRequest::parse(req_env.payload);
                if (seen.challenge.size() != puf.challenge_bits())
                    throw ValidationError("challenge width");
            } catch (const ValidationError &) {
                tally.reject("device:malformed-request", req_env.tainted());
                continue;
            }
            attest::MemoryImage memory = golden;
            attest::AttestOptions options;
            std::optional<std::size_t> taint = req_env.action;
            if (modify && config.adversary.rule == ModifyRule::FlipMemoryByte) {
                const auto pos = tamper_rng.uniform_below(memory.size());
                memory.mutable_data()[pos] ^=
                    static_cast<std::uint8_t>(1u + tamper_rng.uniform_below(255));
                taint = channel.record_action(t, Direction::ToDevice, "modify:flip-memory-byte",
                                              "offset " + std::to_string(pos));
            } else if (modify && config.adversary.rule == ModifyRule::Relocate) {
                options.time.hash_overhead = config.adversary.relocation_overhead;
                taint = channel.record_action(t, Direction::ToDevice, "modify:relocate",
                                              "hash overhead " +
                                                  format_double(options.time.hash_overhead));
            }
            const auto report_msg = attest::device_attest(seen, memory, puf, options);
            for (auto &env : channel.transmit(t, Direction::ToVerifier, report_msg.serialize())) {
                const bool tainted = env.tainted() || taint.has_value();
                if (tainted)
                    ++report.forged_messages;
                attest::AttestVerdict verdict;
                try {
                    verdict = verifier.check(request, attest::AttestationReport::parse(env.payload));
                } catch (const ValidationError &) {
                    tally.reject("verifier:malformed", tainted);
                    continue;
                }
                if (verdict.accepted()) {
                    if (tainted) {
                        ++report.forgeries_accepted;
                        tally.tainted_accept(env.action ? env.action : taint, channel);
                    } else {
                        accepted = true;
                    }
                } else {
                    tally.reject("verifier:" + std::string(attest::to_string(*verdict.reject)),
                                 tainted);
                }
            }
        }
        if (!accepted && !tally.any_reject)
            tally.reject("lost", false);
        rec.adversary_actions = channel.log().size() - actions_before;
        finish_trial(report, std::move(rec), tally, accepted);
    }
    report.adversary_actions = channel.log().size();
    report.harvested_messages = channel.harvested().size();
    report.transcript = channel.transcript_digest();
    report.action_log = channel.log();
    return report;
}

} // namespace

ScenarioReport run_scenario(const ScenarioConfig &config) {
    config.validate();
    return config.protocol == Protocol::Auth ? run_auth(config) : run_attest(config);
}

// ---------------------------------------------------------------------------

KeyValueDoc ScenarioReport::to_kv() const {
    KeyValueDoc doc;
    doc.set("protocol", std::string(to_string(protocol)));
    doc.set("adversary", std::string(to_string(mode)));
    doc.set("trials", trials);
    doc.set("accepts", accepts);
    for (const auto &[reason, count] : rejects)
        doc.set("reject." + reason, count);
    doc.set("adversary_successes", adversary_successes);
    doc.set("untraced_successes", untraced_successes);
    doc.set("adversary_actions", adversary_actions);
    doc.set("forged_messages", forged_messages);
    doc.set("forgeries_accepted", forgeries_accepted);
    doc.set("recovered_sessions", recovered_sessions);
    doc.set("harvested_messages", harvested_messages);
    if (protocol == Protocol::Auth)
        doc.set("final_in_sync", final_in_sync ? "true" : "false");
    doc.set("transcript_sha256", to_hex(transcript));
    return doc;
}

std::string ScenarioReport::trial_csv() const {
    std::ostringstream out;
    out << "trial,outcome,adversary_success,adversary_actions,recovered\n";
    for (const auto &r : trial_log)
        out << r.trial << ',' << r.outcome << ',' << (r.adversary_success ? 1 : 0) << ','
            << r.adversary_actions << ',' << (r.recovered ? 1 : 0) << '\n';
    return out.str();
}

std::string ScenarioReport::action_csv() const {
    std::ostringstream out;
    out << "id,trial,time,direction,kind,detail\n";
    for (const auto &a : action_log)
        out << a.id << ',' << a.trial << ',' << a.time << ',' << to_string(a.direction) << ','
            << a.kind << ",\"" << a.detail << "\"\n";
    return out.str();
}

} // namespace puflab::sim
