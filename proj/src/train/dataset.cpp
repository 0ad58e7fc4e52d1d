#include "srckt/train/dataset.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "srckt/util/error.hpp"
#include "srckt/util/parallel.hpp"

namespace srckt {

std::vector<TokenId> Record::gold() const {
    std::vector<TokenId> seq{tok::Start};
    const auto body = to_prefix(expr);
    seq.insert(seq.end(), body.begin(), body.end());
    seq.push_back(tok::End);
    return seq;
}

Dataset generate_training_set(const DataConfig& config, std::size_t n, std::uint64_t seed) {
    config.grammar.validate();
    Dataset out(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng = make_rng(seed, i);
        for (;;) {
            Expression e = sample_skeleton(config.grammar, rng);
            if (e.node_count() > static_cast<std::size_t>(config.max_tokens)) continue;
            try {
                SupportSet s = make_support(e, config.support, rng);
                out[i] = Record{static_cast<int>(i), std::move(e), std::move(s), std::nullopt};
                return;
            } catch (const Error& err) {
                if (err.code() != ErrorCode::UnsatisfiableDomain) throw;
            }
        }
    });
    return out;
}

std::vector<TrainingExample> to_examples(const Dataset& data) {
    std::vector<TrainingExample> out;
    out.reserve(data.size());
    for (const auto& r : data) out.push_back({r.support, r.gold()});
    return out;
}

namespace {

nlohmann::json record_json(const Record& r) {
    nlohmann::json x = nlohmann::json::array();
    for (std::size_t i = 0; i < r.support.x.rows; ++i) {
        x.push_back(std::vector<double>(r.support.x.row(i), r.support.x.row(i) + r.support.x.cols));
    }
    nlohmann::json j;
    j["id"] = r.id;
    j["tokens"] = to_text(r.expr);
    j["x"] = std::move(x);
    j["y"] = r.support.y;
    j["t"] = r.t ? nlohmann::json(*r.t) : nlohmann::json(nullptr);
    return j;
}

Record parse_record(const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    Record r;
    r.id = j.at("id").get<int>();
    r.expr = parse_text(j.at("tokens").get<std::string>());
    const auto& x = j.at("x");
    const auto& y = j.at("y");
    if (x.size() != y.size()) fail(ErrorCode::ShapeMismatch, "record " + std::to_string(r.id) + ": x/y length differ");
    const std::size_t cols = x.empty() ? 0 : x[0].size();
    r.support.x = Mat(x.size(), cols);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != cols) fail(ErrorCode::ShapeMismatch, "ragged x in record " + std::to_string(r.id));
        for (std::size_t c = 0; c < cols; ++c) r.support.x(i, c) = x[i][c].get<double>();
    }
    r.support.y = y.get<std::vector<double>>();
    if (j.contains("t") && !j["t"].is_null()) r.t = j["t"].get<int>();
    return r;
}

} // namespace

std::string to_jsonl(const Dataset& data) {
    std::string out;
    for (const auto& r : data) {
        out += record_json(r).dump();
        out += '\n';
    }
    return out;
}

void write_jsonl(const std::string& path, const Dataset& data) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write " + path);
    f << to_jsonl(data);
    if (!f) fail(ErrorCode::IoError, "short write to " + path);
}

Dataset read_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorCode::IoError, "cannot open " + path);
    Dataset out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(parse_record(line));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::IoError, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

} // namespace srckt
