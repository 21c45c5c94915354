#include "rescap/io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "rescap/errors.hpp"

namespace rescap {

namespace {

Complex complex_from_json(const Json& j, const char* what) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw config_error("invalid_json", fmt::format("{} must be a number or a [re, im] pair", what));
    return {j[0].get<double>(), j[1].get<double>()};
}

Json complex_to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Eigen::MatrixXd matrix_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw config_error("invalid_json", fmt::format("{} must be a nonempty array of rows", what));
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw config_error("invalid_json", fmt::format("{} has ragged rows", what));
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& x = row[static_cast<std::size_t>(c)];
            if (!x.is_number()) throw config_error("invalid_json", fmt::format("{} has a non-numeric entry", what));
            m(r, c) = x.get<double>();
        }
    }
    return m;
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw config_error("invalid_json", fmt::format("{} must be a nonempty array", what));
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw config_error("invalid_json", fmt::format("{} has a non-numeric entry", what));
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

}  // namespace

LabeledHmm hmm_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("symbols") || !j.contains("matrices"))
        throw config_error("invalid_json", "HMM file needs \"symbols\" and \"matrices\"");
    LabeledHmm hmm;
    const Eigen::VectorXd symbols = vector_from_json(j["symbols"], "symbols");
    hmm.symbols.assign(symbols.data(), symbols.data() + symbols.size());
    if (!j["matrices"].is_array()) throw config_error("invalid_json", "\"matrices\" must be an array");
    for (const auto& m : j["matrices"]) hmm.matrices.push_back(matrix_from_json(m, "labeled matrix"));
    validate(hmm);
    return hmm;
}

Json to_json(const LabeledHmm& hmm) {
    Json matrices = Json::array();
    for (const auto& m : hmm.matrices) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(std::move(row));
        }
        matrices.push_back(std::move(rows));
    }
    return Json{{"symbols", hmm.symbols}, {"matrices", std::move(matrices)}};
}

AutocorrDecomposition decomposition_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("terms") || !j["terms"].is_array())
        throw config_error("invalid_json", "decomposition file needs a \"terms\" array");
    AutocorrDecomposition d;
    for (const auto& t : j["terms"]) {
        if (!t.is_object() || !t.contains("lambda") || !t.contains("A"))
            throw config_error("invalid_json", "each term needs \"lambda\" and \"A\"");
        d.terms.push_back({complex_from_json(t["lambda"], "lambda"), complex_from_json(t["A"], "A")});
    }
    validate(d);
    return d;
}

Json to_json(const AutocorrDecomposition& decomp) {
    Json terms = Json::array();
    for (const auto& t : decomp.terms)
        terms.push_back(Json{{"lambda", complex_to_json(t.lambda)}, {"A", complex_to_json(t.weight)}});
    return Json{{"terms", std::move(terms)}};
}

ReservoirInput reservoir_from_json(const Json& j) {
    if (!j.is_object()) throw config_error("invalid_json", "reservoir file must be a JSON object");
    ReservoirInput out;
    if (j.contains("W") && j.contains("v")) {
        out.w = matrix_from_json(j["W"], "W");
        out.v = vector_from_json(j["v"], "v");
        out.spec = reduce_to_diagonal(*out.w, *out.v);
        return out;
    }
    if (j.contains("d") && j.contains("omega")) {
        const auto& d = j["d"];
        const auto& w = j["omega"];
        if (!d.is_array() || !w.is_array() || d.size() != w.size() || d.empty())
            throw config_error("invalid_json", "\"d\" and \"omega\" must be nonempty arrays of equal length");
        out.spec.d.resize(static_cast<Eigen::Index>(d.size()));
        out.spec.omega.resize(static_cast<Eigen::Index>(w.size()));
        for (std::size_t i = 0; i < d.size(); ++i) {
            out.spec.d(static_cast<Eigen::Index>(i)) = complex_from_json(d[i], "d");
            out.spec.omega(static_cast<Eigen::Index>(i)) = complex_from_json(w[i], "omega");
        }
        validate(out.spec);
        return out;
    }
    throw config_error("invalid_json", "reservoir file needs either \"W\" and \"v\" or \"d\" and \"omega\"");
}

Json to_json(const CapacityReport& report) {
    Json mf = Json::array();
    for (const auto& [k, m] : report.memory_function) mf.push_back(Json::array({k, m}));
    return Json{{"mc", report.mc},
                {"pc", report.pc},
                {"memory_function", std::move(mf)},
                {"b_condition", report.b_condition},
                {"imag_residue", report.imag_residue}};
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("io_error", fmt::format("cannot open {}", path));
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw config_error("invalid_json", fmt::format("{}: {}", path, e.what()));
    }
}

std::optional<InputProcess> named_input(const std::string& name) {
    if (name == "exp01") {
        auto decomp = exponential_autocorr(0.1);
        auto hmm = telegraph_mixture(decomp);
        return InputProcess{name, std::move(decomp), std::move(hmm)};
    }
    if (name == "mix") {
        const double alphas[] = {0.1, 1.0};
        const double weights[] = {0.5, 0.5};
        auto decomp = exponential_mixture(alphas, weights);
        auto hmm = telegraph_mixture(decomp);
        return InputProcess{name, std::move(decomp), std::move(hmm)};
    }
    if (name == "even") {
        auto hmm = even_process();
        auto decomp = autocorr_decomposition(hmm);
        return InputProcess{name, std::move(decomp), std::move(hmm)};
    }
    return std::nullopt;
}

InputProcess load_input(const std::string& name_or_path) {
    if (auto named = named_input(name_or_path)) return *std::move(named);
    const Json j = read_json_file(name_or_path);
    if (j.is_object() && j.contains("terms")) {
        InputProcess in{name_or_path, decomposition_from_json(j), std::nullopt};
        try {
            in.hmm = telegraph_mixture(in.decomp);
        } catch (const Error&) {
            // no HMM realization; closed-form commands still work
        }
        return in;
    }
    auto hmm = standardize_symbols(hmm_from_json(j));
    auto decomp = autocorr_decomposition(hmm);
    return InputProcess{name_or_path, std::move(decomp), std::move(hmm)};
}

}  // namespace rescap
