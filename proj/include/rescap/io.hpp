#pragma once

// File formats:
//   HMM            {"symbols": [s0, ...], "matrices": [[[...]], ...]}
//   decomposition  {"terms": [{"lambda": [re, im], "A": [re, im]}, ...]}
//   reservoir      {"W": [[...]], "v": [...]}  or  {"d": [[re, im], ...], "omega": [[re, im], ...]}
//   report         {"mc", "pc", "memory_function": [[k, m], ...], "b_condition", "imag_residue"}

#include <optional>
#include <string>

#include <json.hpp>

#include "rescap/hmm_input.hpp"
#include "rescap/linear_capacity.hpp"

namespace rescap {

using Json = nlohmann::json;

LabeledHmm hmm_from_json(const Json& j);
Json to_json(const LabeledHmm& hmm);

AutocorrDecomposition decomposition_from_json(const Json& j);
Json to_json(const AutocorrDecomposition& decomp);

/// A reservoir file, keeping the explicit (W, v) form when it was given.
struct ReservoirInput {
    ReservoirSpec spec;
    std::optional<Eigen::MatrixXd> w;
    std::optional<Eigen::VectorXd> v;
};

ReservoirInput reservoir_from_json(const Json& j);
Json to_json(const CapacityReport& report);

Json read_json_file(const std::string& path);

/// An input process: always a decomposition, plus an HMM that generates it
/// when one is known (needed for simulation).
struct InputProcess {
    std::string name;
    AutocorrDecomposition decomp;
    std::optional<LabeledHmm> hmm;
};

/// Bundled inputs: "exp01" (e^{-0.1|t|}), "mix" (½e^{-0.1|t|} + ½e^{-|t|}),
/// "even" (Even Process). Returns nullopt for other names.
std::optional<InputProcess> named_input(const std::string& name);

/// A bundled name, or a path to an HMM or decomposition file. HMM symbols are
/// standardized on load; decompositions get a telegraph realization when
/// their terms allow one.
InputProcess load_input(const std::string& name_or_path);

}  // namespace rescap
