#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "obsdesign/confidence_region.hpp"
#include "obsdesign/data_model.hpp"
#include "obsdesign/optimizer.hpp"
#include "obsdesign/rng.hpp"
#include "obsdesign/synthetic.hpp"

namespace obsdesign {

inline constexpr const char* kToolVersion = "0.1.0";

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Formatting and small file helpers.

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file '" + path.string() + "'");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file '" + path.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

inline std::string fnv1a_hex(std::string_view bytes) {
    const std::uint64_t h = fnv1a(bytes);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= bytes.size()) {
        std::size_t pos = bytes.find('\n', start);
        if (pos == std::string::npos) {
            if (start < bytes.size()) lines.push_back(bytes.substr(start));
            break;
        }
        std::string line = bytes.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = pos + 1;
    }
    return lines;
}

inline double parse_double(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ValidationError(where + ": invalid number '" + s + "'");
    return v;
}

inline long parse_long(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ValidationError(where + ": invalid integer '" + s + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
        throw ValidationError(where + ": invalid unsigned integer '" + s + "'");
    return v;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Dataset and weights CSV.

/// Reads `stratum,treated,outcome,propensity` rows; strata keep first-seen
/// order, weights left unset.
inline std::vector<StratumSample> read_dataset_csv(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    const std::string name = path.filename().string();
    if (lines.empty()) throw ValidationError(name + ": empty file");
    if (detail::trim(lines[0]) != "stratum,treated,outcome,propensity")
        throw ValidationError(name + ":1: expected header 'stratum,treated,outcome,propensity'");

    std::vector<StratumSample> strata;
    std::map<std::string, std::size_t> index;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (detail::trim(lines[ln]).empty()) continue;
        const std::string where = name + ":" + std::to_string(ln + 1);
        const auto cols = detail::split_csv(lines[ln]);
        if (cols.size() != 4) throw ValidationError(where + ": expected 4 columns");
        const std::string id = detail::trim(cols[0]);
        if (id.empty()) throw ValidationError(where + ": empty stratum id");

        UnitRecord rec;
        const long treated = detail::parse_long(cols[1], where);
        if (treated != 0 && treated != 1)
            throw ValidationError(where + ": treated must be 0 or 1");
        rec.treated = treated == 1;
        const long outcome = detail::parse_long(cols[2], where);
        if (outcome != 0 && outcome != 1)
            throw ValidationError(where + ": outcome must be 0 or 1");
        rec.outcome = static_cast<int>(outcome);
        rec.propensity = detail::parse_double(cols[3], where);

        auto it = index.find(id);
        if (it == index.end()) {
            index.emplace(id, strata.size());
            strata.push_back({id, 0.0, {}});
            it = index.find(id);
        }
        strata[it->second].units.push_back(rec);
    }
    if (strata.empty()) throw ValidationError(name + ": no data rows");
    return strata;
}

/// Reads `stratum,weight` rows.
inline std::map<std::string, double> read_strata_csv(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    const std::string name = path.filename().string();
    if (lines.empty()) throw ValidationError(name + ": empty file");
    if (detail::trim(lines[0]) != "stratum,weight")
        throw ValidationError(name + ":1: expected header 'stratum,weight'");
    std::map<std::string, double> weights;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (detail::trim(lines[ln]).empty()) continue;
        const std::string where = name + ":" + std::to_string(ln + 1);
        const auto cols = detail::split_csv(lines[ln]);
        if (cols.size() != 2) throw ValidationError(where + ": expected 2 columns");
        const std::string id = detail::trim(cols[0]);
        if (!weights.emplace(id, detail::parse_double(cols[1], where)).second)
            throw ValidationError(where + ": duplicate stratum '" + id + "'");
    }
    return weights;
}

/// Loads and validates a dataset, applying optional external weights.
inline Dataset load_dataset(const std::filesystem::path& data_path,
                            const std::optional<std::filesystem::path>& strata_path) {
    auto strata = read_dataset_csv(data_path);
    if (strata_path) {
        const auto weights = read_strata_csv(*strata_path);
        for (auto& s : strata) {
            const auto it = weights.find(s.stratum_id);
            if (it == weights.end())
                throw ValidationError(strata_path->filename().string() + ": missing weight for stratum '" +
                                      s.stratum_id + "'");
            s.weight = it->second;
        }
        if (weights.size() != strata.size())
            throw ValidationError(strata_path->filename().string() +
                                  ": contains strata absent from the dataset");
    }
    return validate_dataset(std::move(strata));
}

inline void write_dataset_csv(const std::filesystem::path& path, const Dataset& data) {
    std::string out = "stratum,treated,outcome,propensity\n";
    for (const auto& s : data.strata)
        for (const auto& u : s.units)
            out += s.stratum_id + "," + (u.treated ? "1" : "0") + "," + std::to_string(u.outcome) +
                   "," + format_double(u.propensity) + "\n";
    write_file_bytes(path, out);
}

// ---------------------------------------------------------------------------
// Config file: `key = value` lines, '#' comments.

inline DesignConfig parse_config_text(const std::string& text, const std::string& name) {
    DesignConfig cfg;
    std::size_t ln = 0, start = 0;
    while (start <= text.size()) {
        std::size_t pos = text.find('\n', start);
        std::string line =
            pos == std::string::npos ? text.substr(start) : text.substr(start, pos - start);
        start = pos == std::string::npos ? text.size() + 1 : pos + 1;
        ++ln;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const std::string where = name + ":" + std::to_string(ln);
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ValidationError(where + ": expected 'key = value'");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (value.empty()) throw ValidationError(where + ": empty value for '" + key + "'");

        if (key == "gamma")
            cfg.gamma = detail::parse_double(value, where);
        else if (key == "alpha")
            cfg.alpha = detail::parse_double(value, where);
        else if (key == "bootstrap_reps")
            cfg.bootstrap_reps = static_cast<int>(detail::parse_long(value, where));
        else if (key == "n_r")
            cfg.n_r = detail::parse_long(value, where);
        else if (key == "default_rule") {
            if (value == "equal")
                cfg.default_rule = DefaultRule::Equal;
            else if (value == "weighted")
                cfg.default_rule = DefaultRule::Weighted;
            else
                throw ValidationError(where + ": default_rule must be 'equal' or 'weighted'");
        } else if (key == "seed")
            cfg.seed = detail::parse_u64(value, where);
        else if (key == "sigma_floor")
            cfg.sigma_floor = detail::parse_double(value, where);
        else if (key == "max_iters")
            cfg.solver.max_iters = static_cast<int>(detail::parse_long(value, where));
        else if (key == "rel_tol")
            cfg.solver.rel_tol = detail::parse_double(value, where);
        else if (key == "mve_tol")
            cfg.solver.mve_tol = detail::parse_double(value, where);
        else
            throw ValidationError(where + ": unknown key '" + key + "'");
    }
    return cfg;
}

inline DesignConfig load_config(const std::filesystem::path& path) {
    return parse_config_text(read_file_bytes(path), path.filename().string());
}

inline ordered_json config_to_json(const DesignConfig& cfg) {
    ordered_json j;
    j["gamma"] = cfg.gamma;
    j["alpha"] = cfg.alpha;
    j["bootstrap_reps"] = cfg.bootstrap_reps;
    j["n_r"] = cfg.n_r;
    j["default_rule"] = cfg.default_rule == DefaultRule::Equal ? "equal" : "weighted";
    j["seed"] = cfg.seed;
    j["sigma_floor"] = cfg.sigma_floor;
    j["max_iters"] = cfg.solver.max_iters;
    j["rel_tol"] = cfg.solver.rel_tol;
    j["mve_tol"] = cfg.solver.mve_tol;
    return j;
}

// ---------------------------------------------------------------------------
// Region JSON and rectangle CSV.

struct NamedRegion {
    std::string stratum;
    VarianceRegion region;
    Vec2 point_estimate;
};

inline ordered_json regions_to_json(const std::vector<NamedRegion>& regions) {
    ordered_json arr = ordered_json::array();
    for (const auto& nr : regions) {
        ordered_json r;
        r["stratum"] = nr.stratum;
        r["ellipse_center"] = {nr.region.ellipse.center.x, nr.region.ellipse.center.y};
        r["ellipse_shape"] = {{nr.region.ellipse.shape.xx, nr.region.ellipse.shape.xy},
                              {nr.region.ellipse.shape.xy, nr.region.ellipse.shape.yy}};
        r["box_lo"] = nr.region.box_lo;
        r["box_hi"] = nr.region.box_hi;
        r["point_estimate"] = {nr.point_estimate.x, nr.point_estimate.y};
        arr.push_back(std::move(r));
    }
    ordered_json doc;
    doc["regions"] = std::move(arr);
    return doc;
}

inline void write_regions_json(const std::filesystem::path& path,
                               const std::vector<NamedRegion>& regions) {
    write_file_bytes(path, regions_to_json(regions).dump(2) + "\n");
}

inline std::vector<NamedRegion> load_regions_json(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(name + ": JSON parse error: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("regions") || !doc["regions"].is_array())
        throw ValidationError(name + ": expected top-level object with 'regions' array");

    std::vector<NamedRegion> out;
    for (const auto& r : doc["regions"]) {
        try {
            NamedRegion nr;
            nr.stratum = r.at("stratum").get<std::string>();
            nr.region.ellipse.center = {r.at("ellipse_center").at(0).get<double>(),
                                        r.at("ellipse_center").at(1).get<double>()};
            const auto& m = r.at("ellipse_shape");
            const double xx = m.at(0).at(0).get<double>();
            const double xy01 = m.at(0).at(1).get<double>();
            const double xy10 = m.at(1).at(0).get<double>();
            const double yy = m.at(1).at(1).get<double>();
            if (std::abs(xy01 - xy10) > 1e-12)
                throw ValidationError(name + ": ellipse_shape not symmetric for stratum '" +
                                      nr.stratum + "'");
            nr.region.ellipse.shape = {xx, xy01, yy};
            if (!(xx > 0.0) || nr.region.ellipse.shape.det() <= 0.0)
                throw ValidationError(name + ": ellipse_shape not positive definite for stratum '" +
                                      nr.stratum + "'");
            nr.region.box_lo = r.at("box_lo").get<double>();
            nr.region.box_hi = r.at("box_hi").get<double>();
            if (!(nr.region.box_lo < nr.region.box_hi))
                throw ValidationError(name + ": invalid box for stratum '" + nr.stratum + "'");
            if (r.contains("point_estimate"))
                nr.point_estimate = {r.at("point_estimate").at(0).get<double>(),
                                     r.at("point_estimate").at(1).get<double>()};
            out.push_back(std::move(nr));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(name + ": malformed region record: " + e.what());
        }
    }
    if (out.empty()) throw ValidationError(name + ": no regions");
    return out;
}

inline void write_rectangles_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::vector<ReplicateRectangle>>>& per_stratum) {
    std::string out = "stratum,replicate,s0_lo,s0_hi,s1_lo,s1_hi\n";
    for (const auto& [id, rects] : per_stratum)
        for (std::size_t b = 0; b < rects.size(); ++b)
            out += id + "," + std::to_string(b) + "," + format_double(rects[b].sigma0.var_lower) +
                   "," + format_double(rects[b].sigma0.var_upper) + "," +
                   format_double(rects[b].sigma1.var_lower) + "," +
                   format_double(rects[b].sigma1.var_upper) + "\n";
    write_file_bytes(path, out);
}

inline std::vector<std::pair<std::string, std::vector<ReplicateRectangle>>> read_rectangles_csv(
    const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    const std::string name = path.filename().string();
    if (lines.empty()) throw ValidationError(name + ": empty file");
    if (detail::trim(lines[0]) != "stratum,replicate,s0_lo,s0_hi,s1_lo,s1_hi")
        throw ValidationError(name + ":1: unexpected header");
    std::vector<std::pair<std::string, std::vector<ReplicateRectangle>>> out;
    std::map<std::string, std::size_t> index;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (detail::trim(lines[ln]).empty()) continue;
        const std::string where = name + ":" + std::to_string(ln + 1);
        const auto cols = detail::split_csv(lines[ln]);
        if (cols.size() != 6) throw ValidationError(where + ": expected 6 columns");
        const std::string id = detail::trim(cols[0]);
        ReplicateRectangle rect;
        rect.sigma0 = {detail::parse_double(cols[2], where), detail::parse_double(cols[3], where)};
        rect.sigma1 = {detail::parse_double(cols[4], where), detail::parse_double(cols[5], where)};
        auto it = index.find(id);
        if (it == index.end()) {
            index.emplace(id, out.size());
            out.push_back({id, {}});
            it = index.find(id);
        }
        out[it->second].second.push_back(rect);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Allocation CSVs and solve report JSON.

inline void write_alloc_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                            const std::vector<ArmCountsInt>& alloc) {
    std::string out = "stratum,n_treated,n_control\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out += ids[i] + "," + std::to_string(alloc[i].treated) + "," +
               std::to_string(alloc[i].control) + "\n";
    write_file_bytes(path, out);
}

inline void write_alloc_csv(const std::filesystem::path& path, const std::vector<std::string>& ids,
                            const std::vector<ArmCounts>& alloc) {
    std::string out = "stratum,n_treated,n_control\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out += ids[i] + "," + format_double(alloc[i].treated) + "," +
               format_double(alloc[i].control) + "\n";
    write_file_bytes(path, out);
}

inline ordered_json solve_report_to_json(const SolveReport& rep,
                                         const std::vector<std::string>& ids) {
    ordered_json j;
    j["objective"] = rep.objective;
    j["iterations"] = rep.iterations;
    j["converged"] = rep.converged;
    j["defaulted"] = rep.defaulted;
    j["worst_case_regret_continuous"] = rep.wc_regret_continuous;
    j["worst_case_regret_integer"] = rep.wc_regret_integer;
    ordered_json sigmas = ordered_json::array();
    for (std::size_t i = 0; i < rep.sigmas.size(); ++i) {
        ordered_json s;
        s["stratum"] = ids[i];
        s["s0"] = rep.sigmas[i].s0;
        s["s1"] = rep.sigmas[i].s1;
        sigmas.push_back(std::move(s));
    }
    j["sigmas"] = std::move(sigmas);
    ordered_json alloc = ordered_json::array();
    for (std::size_t i = 0; i < rep.plan.integer.size(); ++i) {
        ordered_json a;
        a["stratum"] = ids[i];
        a["n_treated"] = rep.plan.integer[i].treated;
        a["n_control"] = rep.plan.integer[i].control;
        a["n_treated_continuous"] = rep.plan.continuous[i].treated;
        a["n_control_continuous"] = rep.plan.continuous[i].control;
        alloc.push_back(std::move(a));
    }
    j["allocation"] = std::move(alloc);
    // The full trace can run to thousands of entries; keep a monotone
    // subsample plus the exact endpoints.
    ordered_json trace = ordered_json::array();
    const std::size_t n = rep.trace.size();
    const std::size_t stride = n > 512 ? (n + 511) / 512 : 1;
    for (std::size_t i = 0; i < n; i += stride) trace.push_back(rep.trace[i]);
    if (n > 0 && (n - 1) % stride != 0) trace.push_back(rep.trace[n - 1]);
    j["trace"] = std::move(trace);
    return j;
}

// ---------------------------------------------------------------------------
// Benchmark CSV.

inline void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkReport& rep) {
    std::string out = "design,gamma,avg_loss,rel_to_equal,rel_to_naive,reps,seed\n";
    for (const auto& row : rep.rows) {
        const std::string gamma = std::isnan(row.gamma) ? "" : format_double(row.gamma);
        out += row.design + "," + gamma + "," + format_double(row.avg_loss) + "," +
               format_double(row.rel_to_equal) + "," + format_double(row.rel_to_naive) + "," +
               std::to_string(rep.reps) + "," + std::to_string(rep.seed) + "\n";
    }
    write_file_bytes(path, out);
}

inline BenchmarkReport read_benchmark_csv(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    const std::string name = path.filename().string();
    if (lines.empty()) throw ValidationError(name + ": empty file");
    if (detail::trim(lines[0]) != "design,gamma,avg_loss,rel_to_equal,rel_to_naive,reps,seed")
        throw ValidationError(name + ":1: unexpected header");
    BenchmarkReport rep;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (detail::trim(lines[ln]).empty()) continue;
        const std::string where = name + ":" + std::to_string(ln + 1);
        const auto cols = detail::split_csv(lines[ln]);
        if (cols.size() != 7) throw ValidationError(where + ": expected 7 columns");
        BenchmarkRow row;
        row.design = detail::trim(cols[0]);
        row.gamma = detail::trim(cols[1]).empty()
                        ? std::numeric_limits<double>::quiet_NaN()
                        : detail::parse_double(cols[1], where);
        row.avg_loss = detail::parse_double(cols[2], where);
        row.rel_to_equal = detail::parse_double(cols[3], where);
        row.rel_to_naive = detail::parse_double(cols[4], where);
        rep.reps = static_cast<int>(detail::parse_long(cols[5], where));
        rep.seed = detail::parse_u64(cols[6], where);
        rep.rows.push_back(std::move(row));
    }
    if (rep.rows.empty()) throw ValidationError(name + ": no rows");
    return rep;
}

// ---------------------------------------------------------------------------
// Synthetic spec JSON.

inline SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file_bytes(path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(name + ": JSON parse error: " + e.what());
    }
    SyntheticSpec spec;
    try {
        if (!doc.is_object() || !doc.contains("strata"))
            throw ValidationError(name + ": expected object with 'strata'");
        for (const auto& s : doc["strata"]) {
            SyntheticStratum st;
            st.id = s.at("id").get<std::string>();
            st.mu0 = s.at("mu0").get<double>();
            st.mu1 = s.at("mu1").get<double>();
            st.n_o = s.at("n_o").get<long>();
            st.propensity = s.at("propensity").get<double>();
            spec.strata.push_back(std::move(st));
        }
        if (doc.contains("confounding_gamma"))
            spec.confounding_gamma = doc["confounding_gamma"].get<double>();
        if (doc.contains("outcome_tilt")) spec.outcome_tilt = doc["outcome_tilt"].get<double>();
        if (doc.contains("weight_mode")) {
            const std::string mode = doc["weight_mode"].get<std::string>();
            if (mode == "population")
                spec.weight_mode = WeightMode::Population;
            else if (mode == "equal")
                spec.weight_mode = WeightMode::Equal;
            else
                throw ValidationError(name + ": weight_mode must be 'population' or 'equal'");
        }
        if (doc.contains("seed")) spec.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("reps")) spec.reps = doc["reps"].get<int>();
        if (doc.contains("gammas")) {
            spec.gammas.clear();
            for (const auto& g : doc["gammas"]) spec.gammas.push_back(g.get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(name + ": malformed synthetic spec: " + e.what());
    }
    validate_spec(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// Run manifest.

/// Writes run_manifest.json. The timestamp honors SOURCE_DATE_EPOCH so
/// repeat runs can be byte-identical.
inline void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                           std::uint64_t seed, const ordered_json& config_echo,
                           const std::vector<std::filesystem::path>& inputs,
                           const std::vector<std::string>& outputs) {
    ordered_json j;
    j["tool"] = "obsdesign";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["seed"] = seed;
    const char* sde = std::getenv("SOURCE_DATE_EPOCH");
    j["timestamp"] = sde != nullptr ? std::string(sde) : std::to_string(std::time(nullptr));
    j["config"] = config_echo;
    ordered_json ins = ordered_json::array();
    for (const auto& p : inputs) {
        ordered_json rec;
        rec["path"] = p.filename().string();
        rec["fnv1a64"] = fnv1a_hex(read_file_bytes(p));
        ins.push_back(std::move(rec));
    }
    j["inputs"] = std::move(ins);
    j["outputs"] = outputs;
    write_file_bytes(out_dir / "run_manifest.json", j.dump(2) + "\n");
}

} // namespace obsdesign
