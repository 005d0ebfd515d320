// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include "puflab/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "puflab/accelerator.hpp"
#include "puflab/attack.hpp"
#include "puflab/attest.hpp"
#include "puflab/auth.hpp"
#include "puflab/errors.hpp"
#include "puflab/keys.hpp"
#include "puflab/metrics.hpp"
#include "puflab/sim.hpp"

namespace fs = std::filesystem;

namespace puflab::cli {

namespace {

struct Globals {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::string out = "out";
    std::string config;
};

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError(path.string(), "cannot open for writing");
    f << text;
    if (!f.flush())
        throw IoError(path.string(), "write failed");
}

Bytes read_binary(const fs::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError(path.string(), "cannot open for reading");
    return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void prepare_out(const Globals &g) {
    std::error_code ec;
    fs::create_directories(g.out, ec);
    if (ec || !fs::is_directory(g.out))
        throw IoError(g.out, "cannot create output directory" + (ec ? ": " + ec.message() : ""));
}

/// Arguments that reproduce this run, minus the output directory.
std::vector<std::string> replayable_args(const std::vector<std::string> &args) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out") {
            ++i;
            continue;
        }
        if (args[i].rfind("--out=", 0) == 0)
            continue;
        kept.push_back(args[i]);
    }
    return kept;
}

void write_manifest(const Globals &g, const std::string &subcommand,
                    const std::vector<std::string> &inputs, const std::vector<std::string> &args) {
    KeyValueDoc m;
    m.set("tool", "puflab");
    m.set("version", kToolVersion);
    m.set("subcommand", subcommand);
    m.set("seed", g.seed);
    m.set("out", g.out);
    if (!g.config.empty())
        m.set("config", g.config);
    for (std::size_t i = 0; i < inputs.size(); ++i)
        m.set("input." + std::to_string(i), inputs[i]);
    const auto replay = replayable_args(args);
    for (std::size_t i = 0; i < replay.size(); ++i)
        m.set("arg." + std::to_string(i), replay[i]);
    write_text(fs::path(g.out) / "manifest.txt", m.to_string());
}

PufConfig load_device(const std::string &path) { return PufConfig::from_kv(KeyValueDoc::load(path)); }

std::vector<PufInstance> load_devices(const std::vector<std::string> &paths) {
    if (paths.empty())
        throw ValidationError("no device files given");
    std::vector<PufInstance> devices;
    for (const auto &p : paths) {
        devices.push_back(PufInstance::create(load_device(p)));
        const auto &first = devices.front();
        if (devices.back().challenge_bits() != first.challenge_bits() ||
            devices.back().response_bits() != first.response_bits())
            throw ValidationError(p + ": challenge/response width differs from " + paths.front());
    }
    return devices;
}

std::vector<Challenge> draw_challenges(std::size_t n, std::size_t width, RandomStream rng) {
    if (n == 0)
        throw ValidationError("--challenges must be at least 1");
    std::vector<Challenge> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(random_challenge(width, rng));
    return out;
}

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string opt_fmt(const std::optional<double> &v) { return v ? fmt(*v) : "n/a"; }

// ---------------------------------------------------------------------------

struct GenOptions {
    std::size_t count = 1;
    std::string kind;
    std::size_t challenge_bits = 0;
    std::size_t response_bits = 0;
};

int cmd_gen(const Globals &g, const GenOptions &o, std::ostream &out) {
    PufConfig base;
    DeviceSeed base_seed = make_seed(g.seed);
    if (!g.config.empty()) {
        auto doc = KeyValueDoc::load(g.config);
        if (doc.has("seed"))
            base_seed = parse_seed(doc.get("seed"));
        else
            doc.set("seed", seed_hex(base_seed));
        base = PufConfig::from_kv(doc);
    }
    if (!o.kind.empty())
        base.kind = parse_puf_kind(o.kind);
    if (o.challenge_bits)
        base.challenge_bits = o.challenge_bits;
    if (o.response_bits)
        base.response_bits = o.response_bits;
    if (o.count == 0)
        throw ValidationError("--count must be at least 1");
    base.validate();

    for (std::size_t i = 0; i < o.count; ++i) {
        PufConfig c = base;
        Bytes index;
        put_be64(index, i);
        c.seed = crypto::kdf("cli/gen", {base_seed, index});
        std::ostringstream name;
        name << "device-" << std::setw(3) << std::setfill('0') << i << ".kv";
        write_text(fs::path(g.out) / name.str(), c.to_kv().to_string());
        out << name.str() << "  kind=" << to_string(c.kind) << " L=" << c.challenge_bits
            << " M=" << c.response_bits << " seed_digest=" << to_hex(crypto::sha256(c.seed)).substr(0, 16)
            << '\n';
    }
    return kOk;
}

struct MetricsOptions {
    std::vector<std::string> devices;
    std::size_t challenges = 64;
    std::size_t trials = 5;
    double threshold = 0.25;
    bool intra_only = false;
};

int cmd_metrics(const Globals &g, const MetricsOptions &o, std::ostream &out) {
    if (o.devices.size() < 2 && !o.intra_only)
        throw ValidationError("uniqueness needs at least 2 devices (use --intra-only for one)");
    const auto devices = load_devices(o.devices);
    const RandomStream root(g.seed);
    const auto challenges = draw_challenges(o.challenges, devices.front().challenge_bits(), root.fork(0));
    const auto sample = sample_population(devices, challenges, o.trials, root.fork(1));
    const auto report = compute_metrics(sample.golden, sample.reevaluations, o.threshold);
    write_text(fs::path(g.out) / "metrics.kv", report.to_kv().to_string());
    write_text(fs::path(g.out) / "per_bit.csv", report.per_bit_csv());
    out << "devices=" << report.devices << " columns=" << report.columns
        << " reevaluations=" << report.reevaluations << '\n'
        << "uniformity=" << fmt(report.uniformity) << " uniqueness=" << opt_fmt(report.uniqueness)
        << " reliability=" << opt_fmt(report.reliability)
        << " mean_entropy=" << opt_fmt(report.mean_entropy) << '\n';
    return kOk;
}

std::vector<FilterBand> load_grid(const std::string &path) {
    std::ifstream f(path);
    if (!f)
        throw IoError(path, "cannot open for reading");
    std::vector<FilterBand> grid;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError(path + ":" + std::to_string(lineno) +
                                  ": expected 'delta_min,delta_max'");
        KeyValueDoc cell;
        cell.set("min", line.substr(0, comma));
        cell.set("max", line.substr(comma + 1));
        FilterBand b{cell.get_double("min"), cell.get_double("max")};
        b.validate();
        grid.push_back(b);
    }
    return grid;
}

struct SweepOptions {
    std::vector<std::string> devices;
    std::string grid;
    std::size_t challenges = 64;
    std::size_t trials = 5;
};

int cmd_sweep(const Globals &g, const SweepOptions &o, std::ostream &out) {
    const auto grid = o.grid.empty() ? default_filter_grid() : load_grid(o.grid);
    if (grid.empty())
        throw ValidationError("filter grid is empty");
    const auto devices = load_devices(o.devices);
    const RandomStream root(g.seed);
    const auto challenges = draw_challenges(o.challenges, devices.front().challenge_bits(), root.fork(0));
    const auto sample = sample_population(devices, challenges, o.trials, root.fork(1));
    const auto rows = sweep_filter(sample, grid);
    write_text(fs::path(g.out) / "sweep.csv", sweep_csv(rows));
    out << "delta_min  delta_max  retention  reliability  entropy\n";
    for (const auto &r : rows)
        out << std::setw(9) << format_double(r.band.delta_min) << "  " << std::setw(9)
            << format_double(r.band.delta_max) << "  " << fmt(r.retention) << "     "
            << opt_fmt(r.reliability) << "       " << opt_fmt(r.mean_entropy) << '\n';
    return kOk;
}

struct DemoOptions {
    std::size_t trials = 0;
    std::string adversary, rule;
    std::optional<double> probability;
    std::size_t injections = 0;
    std::string golden, image;
    std::size_t chunk_size = 0;
};

sim::ScenarioConfig scenario_for(Globals &g, sim::Protocol protocol, const DemoOptions &o) {
    KeyValueDoc doc;
    if (!g.config.empty())
        doc = KeyValueDoc::load(g.config);
    KeyValueDoc merged;
    for (const auto &[k, v] : doc.entries())
        if (k != "protocol")
            merged.set(k, v);
    merged.set("protocol", std::string(sim::to_string(protocol)));
    if (o.trials)
        merged.set("trials", o.trials);
    if (!o.adversary.empty())
        merged.set("adversary", o.adversary);
    if (!o.rule.empty())
        merged.set("rule", o.rule);
    if (o.probability)
        merged.set("probability", *o.probability);
    if (o.injections)
        merged.set("injections", o.injections);
    if (o.chunk_size)
        merged.set("chunk_size", o.chunk_size);
    if (g.seed_given || !merged.has("seed"))
        merged.set("seed", g.seed);
    auto config = sim::ScenarioConfig::from_kv(merged);
    g.seed = config.seed;
    return config;
}

int finish_demo(const Globals &g, const sim::ScenarioConfig &config,
                const sim::ScenarioReport &report, std::ostream &out) {
    write_text(fs::path(g.out) / "scenario.kv", config.to_kv().to_string());
    write_text(fs::path(g.out) / "report.kv", report.to_kv().to_string());
    write_text(fs::path(g.out) / "trials.csv", report.trial_csv());
    write_text(fs::path(g.out) / "actions.csv", report.action_csv());
    out << sim::to_string(report.protocol) << ": " << report.accepts << "/" << report.trials
        << " accepted (adversary: " << sim::to_string(report.mode) << ")\n";
    for (const auto &[reason, count] : report.rejects)
        out << "  rejected " << count << "x " << reason << '\n';
    out << "adversary actions: " << report.adversary_actions
        << ", adversary successes: " << report.adversary_successes << '\n';
    if (report.protocol == sim::Protocol::Auth)
        out << "recovered sessions: " << report.recovered_sessions
            << ", final state in sync: " << (report.final_in_sync ? "yes" : "no") << '\n';
    const bool honest_mode =
        report.mode == sim::AdversaryMode::None || report.mode == sim::AdversaryMode::Passive;
    if (report.adversary_successes > 0 || (honest_mode && report.accepts < report.trials))
        return kProtocolFailure;
    return kOk;
}

int cmd_demo_auth(Globals &g, const DemoOptions &o, std::ostream &out) {
    auto config = scenario_for(g, sim::Protocol::Auth, o);
    return finish_demo(g, config, sim::run_scenario(config), out);
}

int cmd_demo_attest(Globals &g, const DemoOptions &o, std::ostream &out) {
    auto config = scenario_for(g, sim::Protocol::Attest, o);
    if (o.image.empty() && o.golden.empty())
        return finish_demo(g, config, sim::run_scenario(config), out);
    if (o.golden.empty() || o.image.empty())
        throw ValidationError("--golden and --image must be given together");

    // One direct run: the verifier holds --golden, the device runs on --image.
    const auto puf = PufInstance::create(config.device);
    attest::MemoryImage golden(read_binary(o.golden), config.chunk_size);
    attest::MemoryImage image(read_binary(o.image), config.chunk_size);
    attest::AttestationVerifier verifier(golden, puf, config.budget_factor);
    RandomStream rng = RandomStream(config.seed).fork(4);
    const auto request = verifier.make_request(1, rng);
    const auto report = attest::device_attest(request, image, puf);
    const auto verdict = verifier.check(request, report);

    KeyValueDoc doc;
    doc.set("timestamp", report.timestamp);
    doc.set("final_hash", to_hex(report.final_hash));
    doc.set("elapsed_ps", report.elapsed_ps);
    doc.set("budget_ps", verifier.time_budget_ps());
    doc.set("chunks", image.chunk_count());
    doc.set("verdict", verdict.accepted() ? "accept" : "reject");
    if (!verdict.accepted())
        doc.set("reason", std::string(attest::to_string(*verdict.reject)));
    write_text(fs::path(g.out) / "attestation.kv", doc.to_string());
    if (verdict.accepted()) {
        out << "attestation: accept (elapsed " << report.elapsed_ps << " ps, budget "
            << verifier.time_budget_ps() << " ps)\n";
        return kOk;
    }
    out << "attestation: reject(" << attest::to_string(*verdict.reject) << ")\n";
    return kProtocolFailure;
}

struct AttackOptions {
    std::string kind = "both";
    std::size_t train = 5000;
    std::size_t test = 1000;
    std::size_t iterations = 500;
    double learning_rate = 1.0;
    std::size_t bits = 16;
    std::vector<std::size_t> budgets;
};

int cmd_attack(const Globals &g, const AttackOptions &o, std::ostream &out) {
    PufConfig base;
    base.seed = make_seed(g.seed);
    if (!g.config.empty()) {
        auto doc = KeyValueDoc::load(g.config);
        if (!doc.has("seed"))
            doc.set("seed", seed_hex(base.seed));
        base = PufConfig::from_kv(doc);
    }
    std::vector<PufKind> kinds;
    if (o.kind == "both")
        kinds = {PufKind::ArbiterLinear, PufKind::Photonic};
    else
        kinds = {parse_puf_kind(o.kind)};
    if (kinds.front() == PufKind::SramWeak)
        throw ValidationError("SRAM arrays take no challenge; nothing to model");
    auto budgets = o.budgets.empty() ? std::vector<std::size_t>{o.train} : o.budgets;
    for (auto b : budgets)
        if (b == 0)
            throw ValidationError("training budgets must be positive");
    if (o.test == 0 || o.bits == 0)
        throw ValidationError("--test and --bits must be positive");
    const std::size_t max_train = *std::max_element(budgets.begin(), budgets.end());

    ModelingAttackConfig ac;
    ac.iterations = o.iterations;
    ac.learning_rate = o.learning_rate;
    const RandomStream root(g.seed);
    std::ostringstream csv;
    csv << "kind,train_size,test_size,mean_train_accuracy,mean_test_accuracy,status\n";
    KeyValueDoc kv;
    out << "kind       train   test   train_acc  test_acc\n";
    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
        PufConfig c = base;
        c.kind = kinds[ki];
        const auto puf = PufInstance::create(c);
        ac.target_bits.clear();
        for (std::size_t k = 0; k < std::min(o.bits, puf.response_bits()); ++k)
            ac.target_bits.push_back(k);
        RandomStream rng = root.fork(ki);
        const auto crps = harvest_crps(puf, max_train + o.test, rng);
        const std::vector<CrpRecord> test(crps.end() - static_cast<long>(o.test), crps.end());
        for (auto b : budgets) {
            const std::vector<CrpRecord> train(crps.begin(), crps.begin() + static_cast<long>(b));
            const auto r = modeling_attack(train, test, ac);
            const std::string status = r.status == AttackStatus::Ok ? "ok" : "degenerate-training";
            csv << to_string(c.kind) << ',' << b << ',' << o.test << ','
                << format_double(r.mean_train_accuracy) << ',' << format_double(r.mean_test_accuracy)
                << ',' << status << '\n';
            const std::string p = std::string(to_string(c.kind)) + "." + std::to_string(b) + ".";
            const auto result_doc = r.to_kv();
            for (const auto &[k, v] : result_doc.entries())
                kv.set(p + k, v);
            out << std::left << std::setw(10) << to_string(c.kind) << std::right << std::setw(6) << b
                << std::setw(7) << o.test << "   " << fmt(r.mean_train_accuracy) << "     "
                << fmt(r.mean_test_accuracy) << '\n';
        }
    }
    write_text(fs::path(g.out) / "attack.csv", csv.str());
    write_text(fs::path(g.out) / "attack.kv", kv.to_string());
    return kOk;
}

int cmd_bench(const Globals &g, std::ostream &out) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t) {
        return std::chrono::duration<double, std::milli>(clock::now() - t).count();
    };
    KeyValueDoc kv;
    const RandomStream root(g.seed);

    auto t = clock::now();
    PufConfig pc;
    pc.seed = make_seed(g.seed);
    const auto puf = PufInstance::create(pc);
    kv.set("photonic.create_ms", ms_since(t));

    RandomStream rng = root.fork(0);
    const auto challenges = draw_challenges(1000, puf.challenge_bits(), root.fork(1));
    t = clock::now();
    for (const auto &c : challenges)
        (void)puf.evaluate(c, rng);
    kv.set("photonic.evaluate_us", ms_since(t));

    RandomStream n0 = root.fork(2), r0 = root.fork(3);
    auto secret = auth::enroll_initial_secret(puf, FuzzyExtractor(), n0, r0);
    auth::DeviceEndpoint device(puf, secret.clone(), root.fork(4), root.fork(5));
    auth::VerifierEndpoint verifier(std::move(secret), puf.challenge_bits());
    t = clock::now();
    std::size_t ok = 0;
    for (int i = 0; i < 100; ++i) {
        auto v = verifier.check_device(device.respond());
        ok += v.accepted() && device.check_verifier(*v.reply) == auth::DeviceVerdict::Committed;
    }
    kv.set("auth.session_ms", ms_since(t) / 100);
    kv.set("auth.sessions_ok", ok);

    crypto::Expander mem("bench/memory", pc.seed);
    attest::MemoryImage image(mem.bytes(64 * 1024), attest::kDefaultChunkSize);
    RandomStream rr = root.fork(6);
    t = clock::now();
    for (std::uint64_t i = 0; i < 10; ++i)
        (void)attest::device_attest({i + 1, random_challenge(puf.challenge_bits(), rr)}, image, puf);
    kv.set("attest.run_ms_64k", ms_since(t) / 10);
    kv.set("attest.simulated_ps_64k", attest::honest_elapsed_ps(image, puf));

    RandomStream ar = root.fork(7);
    Bytes payload = ar.bytes(4096);
    auto key = detail::KeyAccess::make(ar.bytes(SecretKey::size));
    t = clock::now();
    for (std::uint64_t i = 0; i < 1000; ++i) {
        std::array<std::uint8_t, 12> nonce{};
        nonce[11] = static_cast<std::uint8_t>(i);
        (void)aead_open(key, aead_seal(key, nonce, payload));
    }
    kv.set("aead.roundtrip_us_4k", ms_since(t));

    write_text(fs::path(g.out) / "bench.kv", kv.to_string());
    out << kv.to_string();
    return kOk;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Simulated PUF security stack: devices, metrics, protocols and attacks", "puflab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Globals g;
    auto *seed_opt = app.add_option("--seed", g.seed, "Run seed (all randomness derives from it)");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--config", g.config, "Configuration file (key = value)");

    GenOptions gen;
    auto *gen_cmd = app.add_subcommand("gen", "Write device definition files");
    gen_cmd->add_option("--count", gen.count, "Number of devices");
    gen_cmd->add_option("--kind", gen.kind, "photonic | arbiter | sram");
    gen_cmd->add_option("--challenge-bits", gen.challenge_bits);
    gen_cmd->add_option("--response-bits", gen.response_bits);

    MetricsOptions met;
    auto *met_cmd = app.add_subcommand("metrics", "Population metrics over device files");
    met_cmd->add_option("devices", met.devices, "Device files")->required();
    met_cmd->add_option("--challenges", met.challenges);
    met_cmd->add_option("--trials", met.trials, "Noisy re-evaluations per challenge");
    met_cmd->add_option("--threshold", met.threshold, "FAR/FRR decision distance");
    met_cmd->add_flag("--intra-only", met.intra_only, "Allow a single device");

    SweepOptions sw;
    auto *sw_cmd = app.add_subcommand("sweep-filter", "Reliability/aliasing trade-off over filter bands");
    sw_cmd->add_option("devices", sw.devices, "Device files")->required();
    sw_cmd->add_option("--grid", sw.grid, "Band file, one 'delta_min,delta_max' per line");
    sw_cmd->add_option("--challenges", sw.challenges);
    sw_cmd->add_option("--trials", sw.trials);

    DemoOptions da, dt;
    auto add_demo = [](CLI::App *cmd, DemoOptions &o) {
        cmd->add_option("--trials", o.trials);
        cmd->add_option("--adversary", o.adversary,
                        "none | passive | replay | bitflip | drop | modify | inject");
        cmd->add_option("--rule", o.rule, "Modify rule");
        cmd->add_option("--probability", o.probability);
        cmd->add_option("--injections", o.injections);
    };
    auto *da_cmd = app.add_subcommand("demo-auth", "Run the mutual-authentication scenario");
    add_demo(da_cmd, da);
    auto *dt_cmd = app.add_subcommand("demo-attest", "Run the attestation scenario");
    add_demo(dt_cmd, dt);
    dt_cmd->add_option("--golden", dt.golden, "Verifier's memory image (raw binary)");
    dt_cmd->add_option("--image", dt.image, "Device memory image (raw binary)");
    dt_cmd->add_option("--chunk-size", dt.chunk_size);

    AttackOptions at;
    auto *at_cmd = app.add_subcommand("attack", "Modeling attack on harvested CRPs");
    at_cmd->add_option("--kind", at.kind, "arbiter | photonic | both");
    at_cmd->add_option("--train", at.train);
    at_cmd->add_option("--test", at.test);
    at_cmd->add_option("--iterations", at.iterations);
    at_cmd->add_option("--lr", at.learning_rate);
    at_cmd->add_option("--bits", at.bits, "Response bits attacked");
    at_cmd->add_option("--budgets", at.budgets, "Training budgets to sweep")->delimiter(',');

    auto *bench_cmd = app.add_subcommand("bench", "Time the main operations");

    std::string manifest;
    auto *rp_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
    rp_cmd->add_option("manifest", manifest)->required();

    std::vector<std::string> argv_store{"puflab"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &a : argv_store)
        argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kValidation;
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (rp_cmd->parsed()) {
            const auto doc = KeyValueDoc::load(manifest);
            if (doc.get_or("tool", "") != "puflab")
                throw ValidationError(manifest + ": not a puflab manifest");
            std::vector<std::string> again{"--out", g.out};
            for (std::size_t i = 0; auto a = doc.find("arg." + std::to_string(i)); ++i)
                again.push_back(*a);
            if (again.size() == 2 || doc.get_or("subcommand", "") == "replay")
                throw ValidationError(manifest + ": manifest records no replayable command");
            return run(again, out, err);
        }

        prepare_out(g);
        std::string name;
        std::vector<std::string> inputs;
        for (auto *cmd : app.get_subcommands())
            name = cmd->get_name();
        if (met_cmd->parsed())
            inputs = met.devices;
        if (sw_cmd->parsed())
            inputs = sw.devices;

        // Demo commands resolve the effective seed from the scenario first.
        if (da_cmd->parsed() || dt_cmd->parsed()) {
            auto &o = da_cmd->parsed() ? da : dt;
            auto probe = g;
            (void)scenario_for(probe, da_cmd->parsed() ? sim::Protocol::Auth : sim::Protocol::Attest, o);
            g.seed = probe.seed;
            write_manifest(g, name, inputs, args);
            return da_cmd->parsed() ? cmd_demo_auth(g, da, out) : cmd_demo_attest(g, dt, out);
        }
        write_manifest(g, name, inputs, args);
        if (gen_cmd->parsed())
            return cmd_gen(g, gen, out);
        if (met_cmd->parsed())
            return cmd_metrics(g, met, out);
        if (sw_cmd->parsed())
            return cmd_sweep(g, sw, out);
        if (at_cmd->parsed())
            return cmd_attack(g, at, out);
        if (bench_cmd->parsed())
            return cmd_bench(g, out);
        return kInternal;
    } catch (const IoError &e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const ValidationError &e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ShapeError &e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const ProtocolStateError &e) {
        err << "protocol error: " << e.what() << '\n';
        return kProtocolFailure;
    } catch (const TamperError &e) {
        err << "protocol error: " << e.what() << '\n';
        return kProtocolFailure;
    } catch (const std::exception &e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

} // namespace puflab::cli
