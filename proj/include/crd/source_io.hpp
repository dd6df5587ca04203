#pragma once

// Reading and writing the JSON source-specification document. The schema is
// documented in docs/source_spec.md.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "crd/model.hpp"

namespace crd {

namespace detail {

inline std::vector<std::string> read_alphabet(const nlohmann::json& doc, const char* key)
{
    if (!doc.contains(key)) throw Error(ErrorCode::ShapeMismatch, std::string("missing field '") + key + "'");
    const auto& arr = doc.at(key);
    if (!arr.is_array()) throw Error(ErrorCode::ShapeMismatch, std::string("'") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (v.is_string()) out.push_back(v.get<std::string>());
        else if (v.is_number()) out.push_back(v.dump());
        else throw Error(ErrorCode::ShapeMismatch, std::string("'") + key + "' entries must be strings");
    }
    if (out.empty()) throw Error(ErrorCode::EmptyAlphabet, std::string("'") + key + "' is empty");
    std::vector<std::string> sorted = out;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw Error(ErrorCode::ShapeMismatch, std::string("'") + key + "' has duplicate entries");
    return out;
}

inline std::size_t index_of(const std::vector<std::string>& alphabet, const std::string& name, const char* what)
{
    auto it = std::find(alphabet.begin(), alphabet.end(), name);
    if (it == alphabet.end()) throw Error(ErrorCode::ShapeMismatch, std::string("unknown ") + what + " '" + name + "'");
    return static_cast<std::size_t>(it - alphabet.begin());
}

inline std::string name_of(const nlohmann::json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

/// Accepts a nested rows x cols array or a flat row-major array.
inline Matrix read_matrix(const nlohmann::json& v, std::size_t rows, std::size_t cols, const std::string& what)
{
    if (!v.is_array()) throw Error(ErrorCode::ShapeMismatch, what + " must be an array");
    Matrix m(rows, cols);
    auto number = [&](const nlohmann::json& e) {
        if (!e.is_number()) throw Error(ErrorCode::ShapeMismatch, what + " entries must be numbers");
        return e.get<double>();
    };
    if (!v.empty() && v.front().is_array()) {
        if (v.size() != rows) throw Error(ErrorCode::ShapeMismatch, what + " has the wrong number of rows");
        for (std::size_t r = 0; r < rows; ++r) {
            if (!v[r].is_array() || v[r].size() != cols)
                throw Error(ErrorCode::ShapeMismatch, what + " has a row of the wrong length");
            for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(v[r][c]);
        }
    } else {
        if (v.size() != rows * cols) throw Error(ErrorCode::ShapeMismatch, what + " has the wrong number of entries");
        for (std::size_t i = 0; i < rows * cols; ++i) m.data()[i] = number(v[i]);
    }
    return m;
}

inline Matrix named_distortion(const std::string& name, const std::vector<std::string>& symbols,
                               const std::vector<std::string>& reproductions)
{
    if (name == "hamming") {
        Matrix d(symbols.size(), reproductions.size(), 1.0);
        for (std::size_t x = 0; x < symbols.size(); ++x)
            for (std::size_t y = 0; y < reproductions.size(); ++y)
                if (symbols[x] == reproductions[y]) d(x, y) = 0.0;
        return d;
    }
    if (name == "squared_error") {
        auto parse = [](const std::string& s) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != s.size())
                throw Error(ErrorCode::InvalidArgument, "squared_error needs numeric symbol names, got '" + s + "'");
            return v;
        };
        Matrix d(symbols.size(), reproductions.size());
        for (std::size_t x = 0; x < symbols.size(); ++x)
            for (std::size_t y = 0; y < reproductions.size(); ++y) {
                const double e = parse(symbols[x]) - parse(reproductions[y]);
                d(x, y) = e * e;
            }
        return d;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown named distortion '" + name + "'");
}

} // namespace detail

/// Parses and validates a source-specification document.
inline SourceModel validate_source(const nlohmann::json& doc)
{
    using namespace detail;
    if (!doc.is_object()) throw Error(ErrorCode::ShapeMismatch, "document must be a JSON object");
    auto states = read_alphabet(doc, "states");
    auto symbols = read_alphabet(doc, "symbols");
    auto reproductions = read_alphabet(doc, "reproductions");
    if (!doc.contains("joint_pmf")) throw Error(ErrorCode::ShapeMismatch, "missing field 'joint_pmf'");
    Matrix joint = read_matrix(doc.at("joint_pmf"), states.size(), symbols.size(), "joint_pmf");

    SourceModel model;
    model.source = CompositeSource::create(states, symbols, reproductions, std::move(joint));

    if (doc.contains("classifier")) {
        const auto& cls = doc.at("classifier");
        if (!cls.is_object()) throw Error(ErrorCode::ShapeMismatch, "'classifier' must map symbols to labels");
        Classifier c;
        if (doc.contains("labels")) c.labels = read_alphabet(doc, "labels");
        c.map.assign(symbols.size(), 0);
        std::vector<bool> seen(symbols.size(), false);
        for (auto it = cls.begin(); it != cls.end(); ++it) {
            const std::size_t x = index_of(symbols, it.key(), "symbol");
            const std::string label = name_of(it.value());
            auto pos = std::find(c.labels.begin(), c.labels.end(), label);
            if (pos == c.labels.end()) {
                if (doc.contains("labels")) throw Error(ErrorCode::ShapeMismatch, "unknown label '" + label + "'");
                c.labels.push_back(label);
                pos = c.labels.end() - 1;
            }
            c.map[x] = static_cast<std::size_t>(pos - c.labels.begin());
            seen[x] = true;
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            throw Error(ErrorCode::ShapeMismatch, "classifier must label every symbol");
        if (!doc.contains("labels")) {
            // Label order follows the first symbol carrying each label.
            std::vector<std::string> ordered;
            for (std::size_t x = 0; x < symbols.size(); ++x) {
                const auto& l = c.labels[c.map[x]];
                if (std::find(ordered.begin(), ordered.end(), l) == ordered.end()) ordered.push_back(l);
            }
            for (std::size_t x = 0; x < symbols.size(); ++x)
                c.map[x] = index_of(ordered, c.labels[c.map[x]], "label");
            c.labels = std::move(ordered);
        }
        model.classifier = std::move(c);
    } else {
        model.classifier = Classifier::single_class(symbols.size());
    }

    if (doc.contains("criteria")) {
        for (const auto& jc : doc.at("criteria")) {
            FidelityCriterion c;
            c.id = jc.contains("id") ? name_of(jc.at("id")) : std::to_string(model.criteria.size());
            c.state_subset.assign(states.size(), false);
            if (!jc.contains("state_subset")) throw Error(ErrorCode::ShapeMismatch, "criterion without state_subset");
            for (const auto& s : jc.at("state_subset")) c.state_subset[index_of(states, name_of(s), "state")] = true;
            if (!jc.contains("distortion")) throw Error(ErrorCode::ShapeMismatch, "criterion without distortion");
            const auto& jd = jc.at("distortion");
            c.distortion = jd.is_string() ? named_distortion(jd.get<std::string>(), symbols, reproductions)
                                          : read_matrix(jd, symbols.size(), reproductions.size(), "distortion");
            model.criteria.push_back(std::move(c));
        }
    }
    model.validate();
    return model;
}

inline SourceModel validate_source(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ShapeMismatch, std::string("not valid JSON: ") + e.what());
    }
    return validate_source(doc);
}

inline SourceModel load_source(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return validate_source(buf.str());
}

inline nlohmann::json to_json(const SourceModel& model)
{
    const auto& src = model.source;
    nlohmann::json doc;
    doc["states"] = src.states();
    doc["symbols"] = src.symbols();
    doc["reproductions"] = src.reproductions();
    auto rows = nlohmann::json::array();
    for (std::size_t s = 0; s < src.num_states(); ++s) {
        auto r = src.joint().row(s);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    doc["joint_pmf"] = rows;
    doc["labels"] = model.classifier.labels;
    nlohmann::json cls = nlohmann::json::object();
    for (std::size_t x = 0; x < src.num_symbols(); ++x) cls[src.symbols()[x]] = model.classifier.labels[model.classifier(x)];
    doc["classifier"] = cls;
    auto crit = nlohmann::json::array();
    for (const auto& c : model.criteria) {
        nlohmann::json jc;
        jc["id"] = c.id;
        auto subset = nlohmann::json::array();
        for (std::size_t s = 0; s < src.num_states(); ++s)
            if (c.state_subset[s]) subset.push_back(src.states()[s]);
        jc["state_subset"] = subset;
        auto d = nlohmann::json::array();
        for (std::size_t x = 0; x < c.distortion.rows(); ++x) {
            auto r = c.distortion.row(x);
            d.push_back(std::vector<double>(r.begin(), r.end()));
        }
        jc["distortion"] = d;
        crit.push_back(jc);
    }
    doc["criteria"] = crit;
    return doc;
}

} // namespace crd
