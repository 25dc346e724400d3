#include "gpassivity/config.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <set>
#include <sstream>

namespace gpassivity {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& what) { throw Error("config: " + what); }

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            config_error("unknown key '" + it.key() + "' in " + where);
}

double get_number(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) config_error("'" + key + "' must be a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) config_error("'" + key + "' must be an integer");
    return obj[key].get<int>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string()) config_error("'" + key + "' must be a string");
    return obj[key].get<std::string>();
}

std::vector<double> get_number_list(const json& obj, const std::string& key,
                                    const std::vector<double>& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_array()) config_error("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number()) config_error("'" + key + "' must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

json dump_list(const std::vector<double>& v) { return json(v); }

// ---- per-scenario parameter handling ------------------------------------

CorrelatedHeatFlowParams read_heat_flow_params(const json& p) {
    reject_unknown_keys(
        p, {"beta_c", "beta_h", "C", "coupling", "exchange_form", "t_max", "n_samples"},
        "correlated-heat-flow parameters");
    CorrelatedHeatFlowParams out;
    out.beta_c = get_number(p, "beta_c", out.beta_c);
    out.beta_h = get_number(p, "beta_h", out.beta_h);
    out.c = get_number(p, "C", out.c);
    out.coupling = get_number(p, "coupling", out.coupling);
    out.exchange_form = get_string(p, "exchange_form", out.exchange_form);
    out.t_max = get_number(p, "t_max", out.t_max);
    out.n_samples = get_int(p, "n_samples", out.n_samples);
    return out;
}

json dump_params(const CorrelatedHeatFlowParams& p) {
    return {{"beta_c", p.beta_c},   {"beta_h", p.beta_h},
            {"C", p.c},             {"coupling", p.coupling},
            {"exchange_form", p.exchange_form}, {"t_max", p.t_max},
            {"n_samples", p.n_samples}};
}

HeatLeakParams read_heat_leak_params(const json& p) {
    reject_unknown_keys(p,
                        {"gamma", "epsilon", "betas", "alphas", "t_max", "n_samples", "dt",
                         "cnot_control_state", "b_shift"},
                        "heat-leak parameters");
    HeatLeakParams out;
    out.gamma = get_number(p, "gamma", out.gamma);
    out.epsilon = get_number(p, "epsilon", out.epsilon);
    out.betas = get_number_list(p, "betas", out.betas);
    out.alphas = get_number_list(p, "alphas", out.alphas);
    out.t_max = get_number(p, "t_max", out.t_max);
    out.n_samples = get_int(p, "n_samples", out.n_samples);
    out.dt = get_number(p, "dt", out.dt);
    out.cnot_control_state = get_int(p, "cnot_control_state", out.cnot_control_state);
    out.b_shift = get_string(p, "b_shift", out.b_shift);
    return out;
}

json dump_params(const HeatLeakParams& p) {
    return {{"gamma", p.gamma},       {"epsilon", p.epsilon},
            {"betas", dump_list(p.betas)},   {"alphas", dump_list(p.alphas)},
            {"t_max", p.t_max},       {"n_samples", p.n_samples},
            {"dt", p.dt},             {"cnot_control_state", p.cnot_control_state},
            {"b_shift", p.b_shift}};
}

DephasingParams read_dephasing_params(const json& p) {
    reject_unknown_keys(p, {"beta", "beta_x", "xis", "t_max", "n_samples"},
                        "dephasing-bounds parameters");
    DephasingParams out;
    out.beta = get_number(p, "beta", out.beta);
    out.beta_x = get_number(p, "beta_x", out.beta_x);
    out.xis = get_number_list(p, "xis", out.xis);
    out.t_max = get_number(p, "t_max", out.t_max);
    out.n_samples = get_int(p, "n_samples", out.n_samples);
    return out;
}

json dump_params(const DephasingParams& p) {
    return {{"beta", p.beta},
            {"beta_x", p.beta_x},
            {"xis", dump_list(p.xis)},
            {"t_max", p.t_max},
            {"n_samples", p.n_samples}};
}

LazyDemonParams read_demon_params(const json& p) {
    reject_unknown_keys(p,
                        {"T_c", "T_h", "t_evolve", "alpha", "alpha_min", "alpha_max", "alpha_step",
                         "field_scale", "b_shift", "measurement", "chi", "threshold"},
                        "lazy-demon parameters");
    LazyDemonParams out;
    out.t_c = get_number(p, "T_c", out.t_c);
    out.t_h = get_number(p, "T_h", out.t_h);
    out.t_evolve = get_number(p, "t_evolve", out.t_evolve);
    if (p.contains("alpha")) {
        const double a = get_number(p, "alpha", 1.0);
        out.alpha_min = out.alpha_max = a;
        out.alpha_step = 1.0;
    } else {
        out.alpha_min = get_number(p, "alpha_min", out.alpha_min);
        out.alpha_max = get_number(p, "alpha_max", out.alpha_max);
        out.alpha_step = get_number(p, "alpha_step", out.alpha_step);
    }
    out.field_scale = get_number(p, "field_scale", out.field_scale);
    out.b_shift = get_string(p, "b_shift", out.b_shift);
    out.measurement = get_string(p, "measurement", out.measurement);
    if (p.contains("chi")) out.chi = get_number(p, "chi", 0.0);
    out.threshold = get_number(p, "threshold", out.threshold);
    return out;
}

json dump_params(const LazyDemonParams& p) {
    json out = {{"T_c", p.t_c},
                {"T_h", p.t_h},
                {"t_evolve", p.t_evolve},
                {"alpha_min", p.alpha_min},
                {"alpha_max", p.alpha_max},
                {"alpha_step", p.alpha_step},
                {"field_scale", p.field_scale},
                {"b_shift", p.b_shift},
                {"measurement", p.measurement},
                {"threshold", p.threshold}};
    if (p.chi) out["chi"] = *p.chi;
    return out;
}

// ---- custom scenario ------------------------------------------------------

struct CustomScenario {
    int sites = 0;
    SetupDescriptor setup;
    std::optional<DensityMatrix> system_state;
    std::map<std::string, HermitianOperator> hamiltonians;
    std::vector<ProtocolStep> protocol;
    double total_duration = 0.0;
    int n_samples = 101;
    std::vector<double> alphas;
    bool want_report = false;
};

std::vector<PauliTerm> parse_pauli_terms(const json& arr, int sites, const std::string& where) {
    if (!arr.is_array()) config_error(where + " must be an array of Pauli terms");
    std::vector<PauliTerm> terms;
    for (const auto& t : arr) {
        reject_unknown_keys(t, {"coefficient", "factors"}, where);
        PauliTerm term;
        term.coefficient = get_number(t, "coefficient", 0.0);
        const std::string factors = get_string(t, "factors", "");
        std::istringstream stream(factors);
        std::string token;
        while (stream >> token) {
            if (token.size() < 2) config_error(where + ": malformed Pauli factor '" + token + "'");
            Axis axis;
            switch (token[0]) {
                case 'X': axis = Axis::X; break;
                case 'Y': axis = Axis::Y; break;
                case 'Z': axis = Axis::Z; break;
                default: config_error(where + ": malformed Pauli factor '" + token + "'");
            }
            int site = -1;
            const auto res = std::from_chars(token.data() + 1, token.data() + token.size(), site);
            if (res.ec != std::errc() || res.ptr != token.data() + token.size())
                config_error(where + ": malformed Pauli factor '" + token + "'");
            if (site < 0 || site >= sites)
                config_error(where + ": Pauli factor '" + token + "' is out of range for " +
                             std::to_string(sites) + " sites");
            term.factors.emplace_back(site, axis);
        }
        terms.push_back(std::move(term));
    }
    return terms;
}

long parse_basis_state(const std::string& bits, int sites, const std::string& where) {
    if (static_cast<int>(bits.size()) != sites)
        config_error(where + ": basis state '" + bits + "' must have " + std::to_string(sites) +
                     " bits");
    long index = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') config_error(where + ": basis state must be a 0/1 string");
        index = index * 2 + (c - '0');
    }
    return index;
}

CustomScenario read_custom(const json& p) {
    reject_unknown_keys(p,
                        {"sites", "subsystems", "hamiltonians", "protocol", "n_samples",
                         "analysis"},
                        "custom parameters");
    CustomScenario out;
    out.sites = get_int(p, "sites", 0);
    if (out.sites < 1 || out.sites > 8) config_error("custom: sites must lie in [1, 8]");
    const std::vector<int> dims(out.sites, 2);

    if (!p.contains("subsystems") || !p["subsystems"].is_array())
        config_error("custom: 'subsystems' array is required");
    std::vector<std::vector<int>> blocks;
    std::set<int> used_sites;
    for (const auto& s : p["subsystems"]) {
        reject_unknown_keys(s, {"name", "sites", "role", "beta", "hamiltonian", "state"},
                            "custom subsystem");
        SubsystemSpec spec;
        spec.name = get_string(s, "name", "sub" + std::to_string(blocks.size()));
        if (!s.contains("sites") || !s["sites"].is_array())
            config_error("custom subsystem '" + spec.name + "': 'sites' array is required");
        std::vector<int> block;
        for (const auto& v : s["sites"]) {
            const int q = v.get<int>();
            if (q < 0 || q >= out.sites)
                config_error("custom subsystem '" + spec.name + "': site out of range");
            if (!used_sites.insert(q).second)
                config_error("custom subsystem '" + spec.name + "': site listed twice");
            block.push_back(q);
        }
        if (block.empty()) config_error("custom subsystem '" + spec.name + "': empty site list");
        std::sort(block.begin(), block.end());
        // contiguity keeps subsystem factors well defined in tensor order
        for (size_t k = 1; k < block.size(); ++k)
            if (block[k] != block[k - 1] + 1)
                config_error("custom subsystem '" + spec.name + "': sites must be contiguous");

        const std::string role = get_string(s, "role", "microbath");
        spec.role = role == "system" ? Role::System : Role::Microbath;
        if (role != "system" && role != "microbath")
            config_error("custom subsystem '" + spec.name + "': role must be system or microbath");
        if (spec.role == Role::Microbath) spec.beta = get_number(s, "beta", 0.0);

        spec.dim = 1 << block.size();
        if (!s.contains("hamiltonian"))
            config_error("custom subsystem '" + spec.name + "' needs a 'hamiltonian'");
        auto terms = parse_pauli_terms(s["hamiltonian"], out.sites,
                                       "subsystem '" + spec.name + "' hamiltonian");
        // Remap global site indices into the block's local factors.
        for (auto& term : terms)
            for (auto& [site, axis] : term.factors) {
                auto it = std::find(block.begin(), block.end(), site);
                if (it == block.end())
                    config_error("subsystem '" + spec.name +
                                 "' hamiltonian touches a site outside its block");
                site = static_cast<int>(it - block.begin());
            }
        spec.local_hamiltonian =
            build_pauli_operator(terms, static_cast<int>(block.size())).matrix();

        if (spec.role == Role::System) {
            if (!s.contains("state"))
                config_error("custom system subsystem '" + spec.name + "' needs a 'state'");
            reject_unknown_keys(s["state"], {"hamiltonian", "beta"}, "custom system state");
            auto state_terms = parse_pauli_terms(s["state"]["hamiltonian"], out.sites,
                                                 "system state hamiltonian");
            for (auto& term : state_terms)
                for (auto& [site, axis] : term.factors) {
                    auto it = std::find(block.begin(), block.end(), site);
                    if (it == block.end())
                        config_error("system state hamiltonian touches a site outside the block");
                    site = static_cast<int>(it - block.begin());
                }
            out.system_state = gibbs_state(
                build_pauli_operator(state_terms, static_cast<int>(block.size())),
                get_number(s["state"], "beta", 1.0));
        }
        blocks.push_back(block);
        out.setup.subsystems.push_back(std::move(spec));
    }
    if (static_cast<int>(used_sites.size()) != out.sites)
        config_error("custom: subsystems must cover every site exactly once");
    for (size_t k = 0; k < blocks.size(); ++k) {
        if (out.setup.subsystems[k].role == Role::System)
            out.setup.partition.system.push_back(static_cast<int>(k));
        else
            out.setup.partition.environment.push_back(static_cast<int>(k));
    }
    // Tensor order must match site order.
    for (size_t k = 1; k < blocks.size(); ++k)
        if (blocks[k].front() != blocks[k - 1].back() + 1)
            config_error("custom: subsystem blocks must appear in site order");

    if (p.contains("hamiltonians")) {
        if (!p["hamiltonians"].is_object()) config_error("custom: 'hamiltonians' must be a map");
        for (auto it = p["hamiltonians"].begin(); it != p["hamiltonians"].end(); ++it) {
            auto terms = parse_pauli_terms(it.value(), out.sites, "hamiltonian '" + it.key() + "'");
            out.hamiltonians.emplace(it.key(), build_pauli_operator(terms, out.sites));
        }
    }

    auto lookup_hamiltonian = [&](const json& node, const std::string& where) {
        Mat sum = Mat::Zero(1 << out.sites, 1 << out.sites);
        std::vector<std::string> names;
        if (node.is_string())
            names.push_back(node.get<std::string>());
        else if (node.is_array())
            for (const auto& v : node) names.push_back(v.get<std::string>());
        else
            config_error(where + ": 'hamiltonian' must be a name or list of names");
        for (const auto& name : names) {
            auto it = out.hamiltonians.find(name);
            if (it == out.hamiltonians.end())
                config_error(where + ": unknown hamiltonian '" + name + "'");
            sum += it->second.matrix();
        }
        return HermitianOperator(sum, std::vector<int>(out.sites, 2));
    };

    if (p.contains("protocol")) {
        if (!p["protocol"].is_array()) config_error("custom: 'protocol' must be an array");
        for (const auto& s : p["protocol"]) {
            const std::string type = get_string(s, "type", "");
            if (type == "unitary") {
                reject_unknown_keys(s, {"type", "hamiltonian", "duration"}, "unitary step");
                UnitarySegment seg{lookup_hamiltonian(s["hamiltonian"], "unitary step"),
                                   get_number(s, "duration", 0.0)};
                out.total_duration += seg.duration;
                out.protocol.emplace_back(std::move(seg));
            } else if (type == "mixture") {
                reject_unknown_keys(s, {"type", "branches"}, "mixture step");
                std::vector<std::tuple<double, HermitianOperator, double>> branches;
                for (const auto& b : s["branches"]) {
                    reject_unknown_keys(b, {"probability", "hamiltonian", "duration"},
                                        "mixture branch");
                    branches.emplace_back(get_number(b, "probability", 0.0),
                                          lookup_hamiltonian(b["hamiltonian"], "mixture branch"),
                                          get_number(b, "duration", 0.0));
                }
                out.protocol.emplace_back(UnitaryMixture::from_hamiltonians(branches));
            } else if (type == "lindblad") {
                reject_unknown_keys(s, {"type", "hamiltonian", "duration", "dt", "jumps"},
                                    "lindblad step");
                LindbladSegment seg;
                seg.hamiltonian = lookup_hamiltonian(s["hamiltonian"], "lindblad step");
                seg.duration = get_number(s, "duration", 0.0);
                seg.dt = get_number(s, "dt", 0.01);
                const std::vector<int> dims2(out.sites, 2);
                if (s.contains("jumps"))
                    for (const auto& jump : s["jumps"]) {
                        reject_unknown_keys(jump, {"type", "site", "rate"}, "jump operator");
                        const std::string jtype = get_string(jump, "type", "lower");
                        const int site = get_int(jump, "site", 0);
                        if (site < 0 || site >= out.sites)
                            config_error("jump operator site out of range");
                        Mat op;
                        if (jtype == "lower")
                            op = embed_local(sigma_minus(), site, dims2);
                        else if (jtype == "raise")
                            op = embed_local(sigma_plus(), site, dims2);
                        else if (jtype == "dephase")
                            op = embed_local(pauli_matrix(Axis::Z), site, dims2);
                        else
                            config_error("jump operator type must be lower, raise or dephase");
                        seg.jumps.push_back({op, get_number(jump, "rate", 0.0)});
                    }
                out.total_duration += seg.duration;
                out.protocol.emplace_back(std::move(seg));
            } else if (type == "feedback") {
                reject_unknown_keys(s, {"type", "flag", "target", "chi"}, "feedback step");
                const long flag =
                    parse_basis_state(get_string(s, "flag", ""), out.sites, "feedback");
                const long target =
                    parse_basis_state(get_string(s, "target", ""), out.sites, "feedback");
                const long dim = 1L << out.sites;
                Mat p0 = Mat::Zero(dim, dim);
                p0(flag, flag) = 1.0;
                Mat swap = Mat::Identity(dim, dim);
                if (flag != target) {
                    swap(flag, flag) = 0;
                    swap(target, target) = 0;
                    swap(flag, target) = 1;
                    swap(target, flag) = 1;
                }
                LazyFeedback fb;
                fb.projectors = {p0, Mat(Mat::Identity(dim, dim) - p0)};
                fb.unitaries = {swap, Mat::Identity(dim, dim)};
                fb.chi = get_number(s, "chi", 1.0);
                out.protocol.emplace_back(std::move(fb));
            } else {
                config_error("custom protocol step type '" + type + "' is not recognized");
            }
        }
    }
    out.n_samples = get_int(p, "n_samples", out.n_samples);
    if (p.contains("analysis")) {
        reject_unknown_keys(p["analysis"], {"alphas", "report"}, "custom analysis");
        out.alphas = get_number_list(p["analysis"], "alphas", {1.0});
        if (p["analysis"].contains("report")) out.want_report = p["analysis"]["report"].get<bool>();
    } else {
        out.alphas = {1.0};
    }
    return out;
}

// ---- CSV helpers ----------------------------------------------------------

std::string alpha_label(double alpha) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", alpha);
    return buf;
}

class CsvBuilder {
  public:
    explicit CsvBuilder(std::vector<std::string> header) : columns_(std::move(header)) {
        for (size_t i = 0; i < columns_.size(); ++i) {
            if (i) body_ += ',';
            body_ += columns_[i];
        }
        body_ += '\n';
    }

    void row(const std::vector<double>& values) {
        if (values.size() != columns_.size()) throw Error("csv row width mismatch");
        for (size_t i = 0; i < values.size(); ++i) {
            if (i) body_ += ',';
            body_ += format_double(values[i]);
        }
        body_ += '\n';
    }

    const std::string& str() const { return body_; }

  private:
    std::vector<std::string> columns_;
    std::string body_;
};

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    char buf[40];
    const auto res =
        std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific, 17);
    return std::string(buf, res.ptr);
}

SweepAxis parse_axis_spec(const std::string& parameter, const std::string& range_spec) {
    SweepAxis axis;
    axis.parameter = parameter;
    std::istringstream stream(range_spec);
    std::string part;
    std::vector<double> parts;
    while (std::getline(stream, part, ':')) {
        double v = 0.0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), v);
        if (res.ec != std::errc() || res.ptr != part.data() + part.size())
            throw Error("sweep range must be from:to:step with numeric bounds");
        parts.push_back(v);
    }
    if (parts.size() != 3) throw Error("sweep range must be from:to:step");
    axis.from = parts[0];
    axis.to = parts[1];
    axis.step = parts[2];
    if (axis.step <= 0) throw Error("sweep step must be positive");
    return axis;
}

ScenarioConfig parse_config(const json& doc) {
    reject_unknown_keys(doc, {"scenario", "parameters", "output", "sweep"}, "config");
    ScenarioConfig out;
    out.scenario = get_string(doc, "scenario", "");
    static const std::set<std::string> known = {"correlated-heat-flow", "heat-leak",
                                                "dephasing-bounds", "lazy-demon", "custom"};
    if (!known.count(out.scenario))
        config_error("unknown scenario '" + out.scenario + "'");
    const json params = doc.contains("parameters") ? doc["parameters"] : json::object();

    // Validate and normalize: round-trips through the typed structs.
    if (out.scenario == "correlated-heat-flow")
        out.parameters = dump_params(read_heat_flow_params(params));
    else if (out.scenario == "heat-leak")
        out.parameters = dump_params(read_heat_leak_params(params));
    else if (out.scenario == "dephasing-bounds")
        out.parameters = dump_params(read_dephasing_params(params));
    else if (out.scenario == "lazy-demon")
        out.parameters = dump_params(read_demon_params(params));
    else {
        read_custom(params);  // validation only; custom params echo verbatim
        out.parameters = params;
    }

    if (doc.contains("output")) {
        reject_unknown_keys(doc["output"], {"format", "path", "series"}, "output");
        out.format = get_string(doc["output"], "format", out.format);
        if (out.format != "csv" && out.format != "json" && out.format != "both")
            config_error("output format must be csv, json or both");
        out.output_path = get_string(doc["output"], "path", "");
        if (doc["output"].contains("series")) {
            if (!doc["output"]["series"].is_array())
                config_error("output.series must be an array of column names");
            for (const auto& s : doc["output"]["series"])
                out.series.push_back(s.get<std::string>());
        }
    }
    return out;
}

std::string filter_csv_columns(const std::string& csv, const std::vector<std::string>& keep) {
    if (keep.empty()) return csv;
    std::istringstream in(csv);
    std::string header;
    if (!std::getline(in, header)) return csv;
    std::vector<std::string> columns;
    std::istringstream hs(header);
    std::string name;
    while (std::getline(hs, name, ',')) columns.push_back(name);
    std::vector<size_t> selected = {0};  // the leading axis column always stays
    for (size_t i = 1; i < columns.size(); ++i)
        if (std::find(keep.begin(), keep.end(), columns[i]) != keep.end()) selected.push_back(i);
    for (const auto& want : keep)
        if (std::find(columns.begin(), columns.end(), want) == columns.end())
            config_error("output.series names unknown column '" + want + "'");

    std::string out;
    std::string line = header;
    do {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        for (size_t k = 0; k < selected.size(); ++k) {
            if (k) out += ',';
            out += selected[k] < cells.size() ? cells[selected[k]] : "";
        }
        out += '\n';
    } while (std::getline(in, line));
    return out;
}

ScenarioConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& err) {
        throw Error("config parse error in " + path.string() + ": " + err.what());
    }
    return parse_config(doc);
}

namespace {

RunOutcome run_heat_flow(const json& params) {
    const auto result = correlated_heat_flow(read_heat_flow_params(params));
    CsvBuilder csv({"time", "ci_lhs", "cci_lhs", "obs_only_lhs", "q_c", "q_h", "delta_b_tot",
                    "ci_violated", "cci_violated"});
    json series = {{"time", json::array()},   {"ci_lhs", json::array()},
                   {"cci_lhs", json::array()}, {"obs_only_lhs", json::array()},
                   {"q_c", json::array()},     {"q_h", json::array()}};
    for (size_t i = 0; i < result.times.size(); ++i) {
        const auto& rep = result.reports[i];
        csv.row({result.times[i], rep.ci_lhs, rep.cci_lhs, rep.obs_only_lhs, result.q_c[i],
                 result.q_h[i], rep.delta_b_tot, rep.ci_violated ? 1.0 : 0.0,
                 rep.cci_violated ? 1.0 : 0.0});
        series["time"].push_back(result.times[i]);
        series["ci_lhs"].push_back(rep.ci_lhs);
        series["cci_lhs"].push_back(rep.cci_lhs);
        series["obs_only_lhs"].push_back(rep.obs_only_lhs);
        series["q_c"].push_back(result.q_c[i]);
        series["q_h"].push_back(result.q_h[i]);
    }
    RunOutcome out;
    out.summary = {{"min_ci", result.min_ci},
                   {"min_cci", result.min_cci},
                   {"ci_violated", result.ci_violated ? 1.0 : 0.0},
                   {"cci_violated", result.cci_violated ? 1.0 : 0.0},
                   {"q_c_final", result.q_c.back()},
                   {"q_h_final", result.q_h.back()}};
    out.csv = csv.str();
    out.report = {{"scenario", "correlated-heat-flow"},
                  {"parameters", dump_params(result.params)},
                  {"series", series},
                  {"detection",
                   {{"min_ci", result.min_ci},
                    {"min_cci", result.min_cci}}},
                  {"violations",
                   {{"ci", result.ci_violated}, {"cci", result.cci_violated}}}};
    out.exit_code = (result.ci_violated || result.cci_violated) ? 2 : 0;
    return out;
}

RunOutcome run_heat_leak(const json& params) {
    const auto result = heat_leak_detection(read_heat_leak_params(params));
    std::vector<std::string> header = {"time"};
    for (double a : result.params.alphas) header.push_back("dB_a" + alpha_label(a));
    for (size_t q = 0; q < result.polarization.size(); ++q)
        header.push_back("pol_" + std::to_string(q + 1));
    CsvBuilder csv(header);
    for (size_t i = 0; i < result.times.size(); ++i) {
        std::vector<double> row = {result.times[i]};
        for (double a : result.params.alphas) row.push_back(result.alpha_series.at(a)[i]);
        for (const auto& pol : result.polarization) row.push_back(pol[i]);
        csv.row(row);
    }
    json detection = json::object();
    json first = json::object();
    for (const auto& [alpha, t] : result.first_violation)
        first["a" + alpha_label(alpha)] = t ? json(*t) : json(nullptr);
    detection["first_violation_time"] = first;
    detection["control_clean"] = result.control_clean;
    detection["max_polarization_deviation"] = result.max_polarization_deviation;

    RunOutcome out;
    out.summary = {{"any_violation", result.any_violation ? 1.0 : 0.0},
                   {"control_clean", result.control_clean ? 1.0 : 0.0},
                   {"max_polarization_deviation", result.max_polarization_deviation}};
    for (const auto& [alpha, t] : result.first_violation)
        out.summary["first_violation_a" + alpha_label(alpha)] =
            t ? *t : std::numeric_limits<double>::quiet_NaN();
    out.csv = csv.str();
    out.report = {{"scenario", "heat-leak"},
                  {"parameters", dump_params(result.params)},
                  {"series", {{"time", json(result.times)}}},
                  {"detection", detection},
                  {"violations", {{"alpha_family", result.any_violation}}}};
    for (double a : result.params.alphas)
        out.report["series"]["dB_a" + alpha_label(a)] = json(result.alpha_series.at(a));
    out.exit_code = result.any_violation ? 2 : 0;
    return out;
}

RunOutcome run_dephasing(const json& params) {
    const auto result = dephasing_bounds(read_dephasing_params(params));
    const auto& b = result.bounds;
    CsvBuilder csv({"time", "lower_1", "corr_1", "upper_1", "lower_2", "corr_2", "upper_2",
                    "var_sigma_x"});
    for (size_t i = 0; i < b.times.size(); ++i)
        csv.row({b.times[i], b.lower_1[i], b.corr_1[i], b.upper_1[i], b.lower_2[i], b.corr_2[i],
                 b.upper_2[i], b.var_sigma_x[i]});
    double min_slack = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < b.times.size(); ++i) {
        min_slack = std::min({min_slack, b.corr_1[i] - b.lower_1[i], b.upper_1[i] - b.corr_1[i],
                              b.corr_2[i] - b.lower_2[i], b.upper_2[i] - b.corr_2[i]});
    }
    RunOutcome out;
    out.summary = {{"min_sandwich_slack", min_slack}, {"c0", b.c0}};
    out.csv = csv.str();
    out.report = {{"scenario", "dephasing-bounds"},
                  {"parameters", dump_params(result.params)},
                  {"series",
                   {{"time", json(b.times)},
                    {"lower_1", json(b.lower_1)},
                    {"corr_1", json(b.corr_1)},
                    {"upper_1", json(b.upper_1)},
                    {"lower_2", json(b.lower_2)},
                    {"corr_2", json(b.corr_2)},
                    {"upper_2", json(b.upper_2)}}},
                  {"detection", {{"c0", b.c0}, {"min_sandwich_slack", min_slack}}},
                  {"violations", {{"sandwich", false}}}};
    out.exit_code = 0;
    return out;
}

RunOutcome run_demon(const json& params) {
    const auto result = lazy_demon_sweep(read_demon_params(params));
    RunOutcome out;
    if (result.params.chi) {
        CsvBuilder csv({"alpha", "delta_b_alpha", "violated"});
        for (size_t i = 0; i < result.curve.alphas.size(); ++i)
            csv.row({result.curve.alphas[i], result.delta_at_chi[i],
                     result.delta_at_chi[i] < -result.params.threshold ? 1.0 : 0.0});
        out.csv = csv.str();
    } else {
        CsvBuilder csv({"alpha", "chi_star", "delta_chi0", "delta_chi1"});
        for (size_t i = 0; i < result.curve.alphas.size(); ++i)
            csv.row({result.curve.alphas[i], result.curve.chi_star[i], result.delta_chi0[i],
                     result.delta_chi1[i]});
        out.csv = csv.str();
    }
    out.summary = {{"chi_crit", result.curve.chi_crit},
                   {"chi_star_min", result.chi_star_min},
                   {"alpha_opt", result.alpha_opt},
                   {"any_violation", result.any_violation ? 1.0 : 0.0}};
    if (result.params.chi && !result.delta_at_chi.empty())
        out.summary["min_delta"] =
            *std::min_element(result.delta_at_chi.begin(), result.delta_at_chi.end());
    if (result.curve.chi_star.size() == 1) out.summary["chi_star"] = result.curve.chi_star[0];
    out.report = {{"scenario", "lazy-demon"},
                  {"parameters", dump_params(result.params)},
                  {"series",
                   {{"alpha", json(result.curve.alphas)},
                    {"chi_star", json(result.curve.chi_star)},
                    {"delta_chi0", json(result.delta_chi0)},
                    {"delta_chi1", json(result.delta_chi1)}}},
                  {"detection",
                   {{"chi_crit", result.curve.chi_crit},
                    {"alpha_opt", result.alpha_opt},
                    {"chi_star_min", result.chi_star_min}}},
                  {"violations", {{"alpha_family", result.any_violation}}}};
    if (result.params.chi) out.report["series"]["delta_at_chi"] = json(result.delta_at_chi);
    out.exit_code = result.any_violation ? 2 : 0;
    return out;
}

RunOutcome run_custom(const json& params) {
    CustomScenario custom = read_custom(params);
    DensityMatrix rho0 = custom.setup.explicit_initial_state
                             ? *custom.setup.explicit_initial_state
                             : product_initial_state(custom.setup, custom.system_state);
    std::vector<double> grid;
    for (int i = 0; i < custom.n_samples; ++i)
        grid.push_back(custom.total_duration * i /
                       std::max(1, custom.n_samples - 1));
    Trajectory traj = run_protocol(rho0, custom.protocol, grid);

    HermitianOperator b = b_operator(rho0);
    const auto series = alpha_gpi_series(b, traj, custom.alphas);
    std::vector<InequalityReport> reports;
    const bool with_report = custom.want_report && !custom.setup.partition.system.empty();
    if (with_report) reports = ci_cci_report(custom.setup, rho0, traj);

    std::vector<std::string> header = {"time"};
    for (double a : custom.alphas) header.push_back("dB_a" + alpha_label(a));
    if (with_report) {
        header.push_back("ci_lhs");
        header.push_back("cci_lhs");
        header.push_back("obs_only_lhs");
    }
    CsvBuilder csv(header);
    bool any_violation = false;
    for (size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<double> row = {traj.times[i]};
        for (double a : custom.alphas) {
            row.push_back(series.at(a)[i]);
            if (series.at(a)[i] < -1e-8) any_violation = true;
        }
        if (with_report) {
            row.push_back(reports[i].ci_lhs);
            row.push_back(reports[i].cci_lhs);
            row.push_back(reports[i].obs_only_lhs);
            any_violation = any_violation || reports[i].ci_violated || reports[i].cci_violated;
        }
        csv.row(row);
    }
    RunOutcome out;
    out.summary = {{"any_violation", any_violation ? 1.0 : 0.0}};
    out.csv = csv.str();
    out.report = {{"scenario", "custom"},
                  {"parameters", params},
                  {"series", {{"time", json(traj.times)}}},
                  {"violations", {{"any", any_violation}}}};
    for (double a : custom.alphas)
        out.report["series"]["dB_a" + alpha_label(a)] = json(series.at(a));
    out.exit_code = any_violation ? 2 : 0;
    return out;
}

}  // namespace

RunOutcome run_scenario(const ScenarioConfig& config) {
    if (config.scenario == "correlated-heat-flow") return run_heat_flow(config.parameters);
    if (config.scenario == "heat-leak") return run_heat_leak(config.parameters);
    if (config.scenario == "dephasing-bounds") return run_dephasing(config.parameters);
    if (config.scenario == "lazy-demon") return run_demon(config.parameters);
    if (config.scenario == "custom") return run_custom(config.parameters);
    config_error("unknown scenario '" + config.scenario + "'");
}

std::vector<std::filesystem::path> write_outputs(const ScenarioConfig& config,
                                                 const RunOutcome& outcome) {
    namespace fs = std::filesystem;
    fs::path dir = config.output_path.empty() ? fs::path(".") : fs::path(config.output_path);
    fs::create_directories(dir);
    std::vector<fs::path> written;
    if (config.format == "csv" || config.format == "both") {
        const fs::path path = dir / (config.scenario + ".csv");
        std::ofstream out(path, std::ios::binary);
        out << filter_csv_columns(outcome.csv, config.series);
        written.push_back(path);
    }
    if (config.format == "json" || config.format == "both") {
        const fs::path path = dir / (config.scenario + ".json");
        std::ofstream out(path, std::ios::binary);
        out << outcome.report.dump(2) << '\n';
        written.push_back(path);
    }
    return written;
}

SweepOutcome run_sweep(const ScenarioConfig& base, const std::vector<SweepAxis>& axes,
                       int threads) {
    if (axes.empty() || axes.size() > 2)
        throw Error("sweep needs one or two axes");
    std::vector<std::vector<double>> grids;
    for (const auto& axis : axes) {
        std::vector<double> grid;
        for (double v = axis.from; v <= axis.to + 1e-12; v += axis.step) grid.push_back(v);
        if (grid.empty()) throw Error("sweep axis '" + axis.parameter + "' produced no points");
        grids.push_back(std::move(grid));
    }

    struct Point {
        std::vector<double> coords;
        std::map<std::string, double> summary;
        std::string error;
    };
    std::vector<Point> points;
    if (axes.size() == 1) {
        for (double v : grids[0]) points.push_back({{v}, {}, {}});
    } else {
        for (double a : grids[0])
            for (double b : grids[1]) points.push_back({{a, b}, {}, {}});
    }

    auto run_point = [&](Point& point) {
        try {
            json params = base.parameters;
            for (size_t k = 0; k < axes.size(); ++k) params[axes[k].parameter] = point.coords[k];
            // Re-validate with the axis values in place.
            json doc = {{"scenario", base.scenario}, {"parameters", params}};
            ScenarioConfig validated = parse_config(doc);
            point.summary = run_scenario(validated).summary;
        } catch (const std::exception& err) {
            point.error = err.what();
        }
    };

    if (threads <= 1) {
        for (auto& point : points) run_point(point);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<size_t> cursor{0};
        for (int t = 0; t < threads; ++t)
            futures.push_back(std::async(std::launch::async, [&] {
                for (size_t i = cursor.fetch_add(1); i < points.size(); i = cursor.fetch_add(1))
                    run_point(points[i]);
            }));
        for (auto& f : futures) f.get();
    }

    // Union of summary keys, sorted, for a stable header.
    std::set<std::string> keys;
    for (const auto& point : points)
        for (const auto& [k, v] : point.summary) keys.insert(k);

    std::string csv;
    for (const auto& axis : axes) csv += axis.parameter + ",";
    for (const auto& k : keys) csv += k + ",";
    csv += "error\n";
    json rows = json::array();
    bool any_violation = false;
    for (const auto& point : points) {
        for (double c : point.coords) csv += format_double(c) + ",";
        json row = {{"error", point.error.empty() ? json(nullptr) : json(point.error)}};
        for (size_t k = 0; k < axes.size(); ++k) row[axes[k].parameter] = point.coords[k];
        for (const auto& key : keys) {
            const auto it = point.summary.find(key);
            const double v =
                it == point.summary.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
            csv += format_double(v) + ",";
            row[key] = std::isnan(v) ? json(nullptr) : json(v);
        }
        if (point.summary.count("any_violation") && point.summary.at("any_violation") > 0.5)
            any_violation = true;
        if (point.summary.count("ci_violated") && point.summary.at("ci_violated") > 0.5)
            any_violation = true;
        csv += point.error.empty() ? "" : ("\"" + point.error + "\"");
        csv += '\n';
        rows.push_back(std::move(row));
    }

    SweepOutcome out;
    out.csv = csv;
    out.report = {{"scenario", base.scenario},
                  {"base_parameters", base.parameters},
                  {"axes", json::array()},
                  {"points", rows}};
    for (const auto& axis : axes)
        out.report["axes"].push_back({{"parameter", axis.parameter},
                                      {"from", axis.from},
                                      {"to", axis.to},
                                      {"step", axis.step}});
    out.exit_code = any_violation ? 2 : 0;
    return out;
}

}  // namespace gpassivity
