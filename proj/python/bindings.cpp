// Copyright The puflab Authors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "puflab/accelerator.hpp"
#include "puflab/attack.hpp"
#include "puflab/attest.hpp"
#include "puflab/cli.hpp"
#include "puflab/errors.hpp"
#include "puflab/keys.hpp"
#include "puflab/metrics.hpp"
#include "puflab/puf.hpp"
#include "puflab/sim.hpp"

namespace py = pybind11;
using namespace puflab;

namespace {

py::bytes to_py(const Bytes &b) { return {reinterpret_cast<const char *>(b.data()), b.size()}; }

template <std::size_t N> py::bytes to_py(const std::array<std::uint8_t, N> &b) {
    return {reinterpret_cast<const char *>(b.data()), N};
}

Bytes from_py(const py::bytes &b) {
    const std::string s = b;
    return Bytes(s.begin(), s.end());
}

py::dict kv_to_dict(const KeyValueDoc &doc) {
    py::dict d;
    for (const auto &[k, v] : doc.entries())
        d[py::str(k)] = v;
    return d;
}

ResponseMatrix matrix_from(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> a,
                           std::size_t bits_per_response) {
    if (a.ndim() != 2)
        throw ShapeError("response matrix must be 2-D (devices x bits)");
    std::vector<Bits> rows;
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < r.shape(0); ++i) {
        Bits row(static_cast<std::size_t>(r.shape(1)));
        for (py::ssize_t j = 0; j < r.shape(1); ++j)
            row[static_cast<std::size_t>(j)] = r(i, j);
        rows.push_back(std::move(row));
    }
    return ResponseMatrix::from_rows(rows, bits_per_response);
}

py::dict metrics_dict(const MetricsReport &m) {
    py::dict d = kv_to_dict(m.to_kv());
    d["bit_entropy"] = m.bit_entropy;
    d["bit_probability"] = m.bit_probability;
    d["device_uniformity"] = m.device_uniformity;
    return d;
}

} // namespace

PYBIND11_MODULE(_puflab, m) {
    m.doc() = "Simulated PUF security stack";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ProtocolStateError>(m, "ProtocolStateError", PyExc_RuntimeError);
    py::register_exception<TamperError>(m, "TamperError", PyExc_RuntimeError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::enum_<PufKind>(m, "PufKind")
        .value("Photonic", PufKind::Photonic)
        .value("ArbiterLinear", PufKind::ArbiterLinear)
        .value("SramWeak", PufKind::SramWeak);

    py::class_<RandomStream>(m, "RandomStream")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("fork", &RandomStream::fork)
        .def("uniform", &RandomStream::uniform)
        .def("bits", &RandomStream::bits);

    py::class_<PufConfig>(m, "PufConfig")
        .def(py::init([](PufKind kind, std::uint64_t seed, std::size_t challenge_bits,
                         std::size_t response_bits, double noise_sigma) {
                 PufConfig c;
                 c.kind = kind;
                 c.seed = make_seed(seed);
                 c.challenge_bits = challenge_bits;
                 c.response_bits = response_bits;
                 c.env.noise_sigma = noise_sigma;
                 c.validate();
                 return c;
             }),
             py::arg("kind") = PufKind::Photonic, py::arg("seed") = 1,
             py::arg("challenge_bits") = 64, py::arg("response_bits") = 128,
             py::arg("noise_sigma") = 0.02)
        .def_readwrite("kind", &PufConfig::kind)
        .def_readwrite("challenge_bits", &PufConfig::challenge_bits)
        .def_readwrite("response_bits", &PufConfig::response_bits)
        .def_property(
            "noise_sigma", [](const PufConfig &c) { return c.env.noise_sigma; },
            [](PufConfig &c, double v) { c.env.noise_sigma = v; })
        .def_property(
            "temperature_delta", [](const PufConfig &c) { return c.env.temperature_delta; },
            [](PufConfig &c, double v) { c.env.temperature_delta = v; })
        .def_property_readonly("seed_hex", [](const PufConfig &c) { return seed_hex(c.seed); })
        .def("to_text", [](const PufConfig &c) { return c.to_kv().to_string(); })
        .def_static("from_text",
                    [](const std::string &text) { return PufConfig::from_kv(KeyValueDoc::parse(text)); });

    py::class_<PufInstance>(m, "PufInstance")
        .def_static("create", &PufInstance::create)
        .def_property_readonly("kind", &PufInstance::kind)
        .def_property_readonly("challenge_bits", &PufInstance::challenge_bits)
        .def_property_readonly("response_bits", &PufInstance::response_bits)
        .def(
            "evaluate",
            [](const PufInstance &p, const Bits &challenge, RandomStream &noise) {
                return p.evaluate(Challenge(challenge), noise).bits;
            },
            py::arg("challenge"), py::arg("noise"))
        .def(
            "evaluate_noiseless",
            [](const PufInstance &p, const Bits &challenge) {
                return p.evaluate_noiseless(Challenge(challenge)).bits;
            },
            py::arg("challenge"))
        .def("analog",
             [](const PufInstance &p, const Bits &challenge) {
                 return p.evaluate_noiseless(Challenge(challenge)).analog;
             })
        .def("state_digest", [](const PufInstance &p) { return to_hex(p.state_digest()); });

    m.def(
        "compute_metrics",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> golden,
           std::size_t bits_per_response, std::vector<py::array_t<std::uint8_t>> reevaluations,
           double threshold) {
            auto g = matrix_from(golden, bits_per_response);
            std::vector<ResponseMatrix> re;
            for (auto &r : reevaluations)
                re.push_back(matrix_from(r, bits_per_response));
            return metrics_dict(compute_metrics(g, re, threshold));
        },
        py::arg("golden"), py::arg("bits_per_response"),
        py::arg("reevaluations") = std::vector<py::array_t<std::uint8_t>>{},
        py::arg("threshold") = 0.25,
        "Uniformity, uniqueness, reliability and bit-aliasing entropy of a devices x bits matrix.");

    m.def(
        "fe_generate",
        [](const Bits &response, std::uint64_t seed) {
            RandomStream rng(seed);
            auto e = fe_generate(response, rng);
            return py::make_tuple(to_py(e.key.fingerprint()), to_py(e.helper.serialize()));
        },
        py::arg("response"), py::arg("seed"),
        "Returns (key fingerprint, serialized helper data). Raw key bytes never leave the library.");
    m.def(
        "fe_reproduce",
        [](const Bits &noisy, const py::bytes &helper) -> py::object {
            auto r = fe_reproduce(noisy, HelperData::parse(from_py(helper)));
            if (!r.ok())
                return py::none();
            return to_py(r.key->fingerprint());
        },
        py::arg("noisy"), py::arg("helper"),
        "Key fingerprint on success, None on a detected reproduction failure.");

    m.def(
        "derive_walk",
        [](const py::bytes &first_response, std::uint64_t timestamp, std::size_t n) {
            return attest::derive_walk(from_py(first_response), timestamp, n);
        },
        py::arg("first_response"), py::arg("timestamp"), py::arg("n"));
    m.def(
        "attest",
        [](const PufInstance &puf, const py::bytes &memory, std::uint64_t timestamp,
           const Bits &challenge, std::size_t chunk_size) {
            attest::MemoryImage image(from_py(memory), chunk_size);
            auto rep = attest::device_attest({timestamp, Challenge(challenge)}, image, puf);
            return py::make_tuple(to_py(rep.final_hash), rep.elapsed_ps);
        },
        py::arg("puf"), py::arg("memory"), py::arg("timestamp"), py::arg("challenge"),
        py::arg("chunk_size") = attest::kDefaultChunkSize,
        "Honest device attestation: (final hash, simulated elapsed picoseconds).");

    m.def(
        "run_scenario",
        [](const std::string &config_text) {
            auto config = sim::ScenarioConfig::from_kv(KeyValueDoc::parse(config_text));
            sim::ScenarioReport report;
            {
                py::gil_scoped_release release;
                report = sim::run_scenario(config);
            }
            return kv_to_dict(report.to_kv());
        },
        py::arg("config_text"), "Runs a scenario given as 'key = value' lines.");

    m.def(
        "modeling_attack",
        [](PufKind kind, std::uint64_t seed, std::size_t train, std::size_t test,
           std::size_t iterations, std::size_t bits) {
            PufConfig c;
            c.kind = kind;
            c.seed = make_seed(seed);
            const auto puf = PufInstance::create(c);
            RandomStream rng(seed);
            const auto crps = harvest_crps(puf, train + test, rng);
            std::vector<CrpRecord> tr(crps.begin(), crps.begin() + static_cast<long>(train));
            std::vector<CrpRecord> te(crps.begin() + static_cast<long>(train), crps.end());
            ModelingAttackConfig ac;
            ac.iterations = iterations;
            for (std::size_t k = 0; k < std::min(bits, puf.response_bits()); ++k)
                ac.target_bits.push_back(k);
            return kv_to_dict(modeling_attack(tr, te, ac).to_kv());
        },
        py::arg("kind"), py::arg("seed") = 1, py::arg("train") = 5000, py::arg("test") = 1000,
        py::arg("iterations") = 500, py::arg("bits") = 16);

    m.def(
        "cli",
        [](const std::vector<std::string> &args) {
            std::ostringstream out, err;
            int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process: (exit code, stdout, stderr).");
}
