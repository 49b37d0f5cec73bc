#include "bde/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "bde/errors.hpp"

namespace bde {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted)
        throw DataError("unterminated quote on line " + std::to_string(line_no));
    fields.push_back(std::move(field));
    return fields;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                        ", column '" + column + "'");
    return value;
}

}  // namespace

LoadedCsv load_csv(const std::string& path, const std::vector<std::string>& target_names,
                   Task task) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line, 1);
    std::unordered_map<std::string, std::size_t> col_index;
    for (std::size_t j = 0; j < header.size(); ++j) col_index.emplace(header[j], j);

    if (task == Task::classification && target_names.size() != 1)
        throw ConfigError("classification expects exactly one target column");
    if (target_names.empty()) throw ConfigError("at least one target column is required");

    std::vector<std::size_t> target_cols;
    for (const auto& name : target_names) {
        const auto it = col_index.find(name);
        if (it == col_index.end())
            throw DataError("missing column '" + name + "' in '" + path + "'");
        target_cols.push_back(it->second);
    }

    LoadedCsv out;
    out.target_names = target_names;
    std::vector<std::size_t> feature_cols;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (std::find(target_cols.begin(), target_cols.end(), j) == target_cols.end()) {
            feature_cols.push_back(j);
            out.feature_names.push_back(header[j]);
        }
    }
    if (feature_cols.empty()) throw DataError("no feature columns left in '" + path + "'");

    std::vector<std::vector<double>> feat_rows;
    std::vector<std::vector<double>> target_rows;
    std::unordered_map<std::string, int> label_ids;
    std::size_t line_no = 1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = split_csv_line(line, line_no);
        if (fields.size() != header.size())
            throw DataError("row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        std::vector<double> feats;
        feats.reserve(feature_cols.size());
        for (std::size_t j : feature_cols)
            feats.push_back(parse_cell(fields[j], row, header[j]));
        feat_rows.push_back(std::move(feats));

        if (task == Task::regression) {
            std::vector<double> targets;
            for (std::size_t j : target_cols)
                targets.push_back(parse_cell(fields[j], row, header[j]));
            target_rows.push_back(std::move(targets));
        } else {
            const std::string& label = fields[target_cols[0]];
            auto [it, inserted] = label_ids.emplace(label, int(out.label_dictionary.size()));
            if (inserted) out.label_dictionary.push_back(label);
            out.data.labels.push_back(it->second);
        }
    }
    if (feat_rows.empty()) throw DataError("no data rows in '" + path + "'");

    out.data.task = task;
    out.data.X.resize(Eigen::Index(feat_rows.size()), Eigen::Index(feature_cols.size()));
    for (std::size_t i = 0; i < feat_rows.size(); ++i)
        for (std::size_t j = 0; j < feature_cols.size(); ++j)
            out.data.X(Eigen::Index(i), Eigen::Index(j)) = feat_rows[i][j];
    if (task == Task::regression) {
        out.data.y.resize(Eigen::Index(target_rows.size()), Eigen::Index(target_cols.size()));
        for (std::size_t i = 0; i < target_rows.size(); ++i)
            for (std::size_t j = 0; j < target_cols.size(); ++j)
                out.data.y(Eigen::Index(i), Eigen::Index(j)) = target_rows[i][j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization of the configuration types

namespace {

std::string activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "tanh";
}

Activation activation_from(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + name + "'");
}

json network_to_json(const NetworkConfig& net) {
    return json{{"input_dim", net.input_dim},
                {"hidden_layers", net.hidden_layers},
                {"activation", activation_name(net.activation)},
                {"task", net.task == Task::regression ? "regression" : "classification"},
                {"head_dim", net.head_dim}};
}

NetworkConfig network_from_json(const json& j) {
    NetworkConfig net;
    net.input_dim = j.at("input_dim").get<int>();
    net.hidden_layers = j.at("hidden_layers").get<std::vector<int>>();
    net.activation = activation_from(j.at("activation").get<std::string>());
    const std::string task = j.at("task").get<std::string>();
    if (task != "regression" && task != "classification")
        throw ConfigError("unknown task '" + task + "'");
    net.task = task == "regression" ? Task::regression : Task::classification;
    net.head_dim = j.at("head_dim").get<int>();
    return net;
}

json ensemble_config_to_json(const EnsembleConfig& cfg) {
    return json{{"n_members", cfg.n_members},
                {"network", network_to_json(cfg.net)},
                {"optimizer",
                 {{"lr", cfg.opt.lr},
                  {"weight_decay", cfg.opt.weight_decay},
                  {"epochs", cfg.opt.epochs},
                  {"patience", cfg.opt.patience},
                  {"validation_split", cfg.opt.validation_split},
                  {"beta1", cfg.opt.beta1},
                  {"beta2", cfg.opt.beta2},
                  {"eps", cfg.opt.eps},
                  {"batch_size", cfg.opt.batch_size}}},
                {"sampler",
                 {{"warmup_steps", cfg.sampler.warmup_steps},
                  {"n_samples", cfg.sampler.n_samples},
                  {"n_thinning", cfg.sampler.n_thinning},
                  {"desired_energy_var_start", cfg.sampler.energy_var_start},
                  {"desired_energy_var_end", cfg.sampler.energy_var_end},
                  {"initial_step_size", cfg.sampler.initial_step_size},
                  {"decoherence_length", cfg.sampler.decoherence_length},
                  {"prior_std", cfg.sampler.prior.prior_std}}},
                {"master_seed", cfg.master_seed},
                {"max_workers", cfg.max_workers}};
}

EnsembleConfig ensemble_config_from_json(const json& j) {
    EnsembleConfig cfg;
    cfg.n_members = j.at("n_members").get<int>();
    cfg.net = network_from_json(j.at("network"));
    const json& opt = j.at("optimizer");
    cfg.opt.lr = opt.at("lr").get<double>();
    cfg.opt.weight_decay = opt.at("weight_decay").get<double>();
    cfg.opt.epochs = opt.at("epochs").get<long>();
    cfg.opt.patience = opt.at("patience").get<long>();
    cfg.opt.validation_split = opt.at("validation_split").get<double>();
    cfg.opt.beta1 = opt.at("beta1").get<double>();
    cfg.opt.beta2 = opt.at("beta2").get<double>();
    cfg.opt.eps = opt.at("eps").get<double>();
    cfg.opt.batch_size = opt.at("batch_size").get<long>();
    const json& smp = j.at("sampler");
    cfg.sampler.warmup_steps = smp.at("warmup_steps").get<long>();
    cfg.sampler.n_samples = smp.at("n_samples").get<long>();
    cfg.sampler.n_thinning = smp.at("n_thinning").get<long>();
    cfg.sampler.energy_var_start = smp.at("desired_energy_var_start").get<double>();
    cfg.sampler.energy_var_end = smp.at("desired_energy_var_end").get<double>();
    cfg.sampler.initial_step_size = smp.at("initial_step_size").get<double>();
    cfg.sampler.decoherence_length = smp.at("decoherence_length").get<double>();
    cfg.sampler.prior.prior_std = smp.at("prior_std").get<double>();
    cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    cfg.max_workers = j.at("max_workers").get<int>();
    return cfg;
}

template <typename T>
void append_le(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T read_le(const std::string& bytes, std::size_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

constexpr char kMagic[4] = {'B', 'D', 'E', '1'};

}  // namespace

std::uint64_t fnv1a64(const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string encode_model(const PosteriorEnsemble& ens, const ModelExtras& extras) {
    json meta;
    meta["format_version"] = kModelFormatVersion;
    meta["rows"] = ens.samples.rows();
    meta["cols"] = ens.samples.cols();
    meta["config"] = ensemble_config_to_json(ens.config);
    meta["standardization"] = {
        {"x_mean", std::vector<double>(ens.standardization.x_mean.begin(),
                                       ens.standardization.x_mean.end())},
        {"x_scale", std::vector<double>(ens.standardization.x_scale.begin(),
                                        ens.standardization.x_scale.end())},
        {"y_mean", std::vector<double>(ens.standardization.y_mean.begin(),
                                       ens.standardization.y_mean.end())},
        {"y_scale", std::vector<double>(ens.standardization.y_scale.begin(),
                                        ens.standardization.y_scale.end())},
        {"constant_features", ens.standardization.constant_features},
        {"constant_targets", ens.standardization.constant_targets},
    };
    json members = json::array();
    for (const auto& m : ens.members)
        members.push_back({{"seed", m.seed},
                           {"final_eps", m.final_eps},
                           {"final_L", m.final_L},
                           {"map_loss", m.map_loss},
                           {"divergences", m.divergences}});
    meta["members"] = members;
    meta["target_columns"] = extras.target_columns;
    meta["label_dictionary"] = extras.label_dictionary;

    const std::string meta_text = meta.dump();
    std::string out;
    out.append(kMagic, 4);
    append_le<std::uint64_t>(out, meta_text.size());
    out += meta_text;
    const auto rows = std::size_t(ens.samples.rows());
    const auto cols = std::size_t(ens.samples.cols());
    const std::size_t payload_offset = out.size();
    out.resize(out.size() + rows * cols * sizeof(double));
    // Row-major payload: each retained sample is contiguous.
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = ens.samples(Eigen::Index(i), Eigen::Index(j));
            std::memcpy(out.data() + payload_offset + (i * cols + j) * sizeof(double), &v,
                        sizeof(double));
        }
    append_le<std::uint64_t>(out, fnv1a64(out.data(), out.size()));
    return out;
}

LoadedModel decode_model(const std::string& bytes) {
    if (bytes.size() < 4 + sizeof(std::uint64_t) * 2)
        throw TruncatedError("model container too small (" + std::to_string(bytes.size()) +
                             " bytes)");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ContainerError("bad magic bytes; not a BDE model container");

    const std::uint64_t stored_checksum = read_le<std::uint64_t>(bytes, bytes.size() - 8);
    const std::uint64_t actual = fnv1a64(bytes.data(), bytes.size() - 8);
    if (stored_checksum != actual)
        throw ChecksumError("model container checksum mismatch");

    const std::uint64_t meta_len = read_le<std::uint64_t>(bytes, 4);
    const std::size_t meta_offset = 4 + sizeof(std::uint64_t);
    if (meta_offset + meta_len + 8 > bytes.size())
        throw TruncatedError("model container metadata extends past end of file");

    json meta;
    try {
        meta = json::parse(bytes.substr(meta_offset, meta_len));
    } catch (const json::exception& e) {
        throw ContainerError(std::string("bad container metadata: ") + e.what());
    }

    const auto version = meta.at("format_version").get<std::uint32_t>();
    if (version != kModelFormatVersion)
        throw VersionError("unsupported model format version " + std::to_string(version) +
                           " (expected " + std::to_string(kModelFormatVersion) + ")");

    LoadedModel out;
    try {
        const auto rows = meta.at("rows").get<std::size_t>();
        const auto cols = meta.at("cols").get<std::size_t>();
        const std::size_t payload_offset = meta_offset + meta_len;
        const std::size_t payload_len = bytes.size() - 8 - payload_offset;
        if (payload_len != rows * cols * sizeof(double))
            throw TruncatedError("payload holds " + std::to_string(payload_len) +
                                 " bytes, expected " +
                                 std::to_string(rows * cols * sizeof(double)));

        out.ensemble.config = ensemble_config_from_json(meta.at("config"));
        const json& st = meta.at("standardization");
        auto to_vec = [](const json& arr) {
            const auto v = arr.get<std::vector<double>>();
            return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size())).eval();
        };
        out.ensemble.standardization.x_mean = to_vec(st.at("x_mean"));
        out.ensemble.standardization.x_scale = to_vec(st.at("x_scale"));
        out.ensemble.standardization.y_mean = to_vec(st.at("y_mean"));
        out.ensemble.standardization.y_scale = to_vec(st.at("y_scale"));
        out.ensemble.standardization.constant_features =
            st.at("constant_features").get<std::vector<int>>();
        out.ensemble.standardization.constant_targets =
            st.at("constant_targets").get<std::vector<int>>();
        for (const json& m : meta.at("members"))
            out.ensemble.members.push_back(MemberMeta{
                .seed = m.at("seed").get<std::uint64_t>(),
                .final_eps = m.at("final_eps").get<double>(),
                .final_L = m.at("final_L").get<double>(),
                .map_loss = m.at("map_loss").get<double>(),
                .divergences = m.at("divergences").get<int>(),
            });
        out.extras.target_columns = meta.at("target_columns").get<std::vector<std::string>>();
        out.extras.label_dictionary =
            meta.at("label_dictionary").get<std::vector<std::string>>();

        out.ensemble.samples.resize(Eigen::Index(rows), Eigen::Index(cols));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                double v;
                std::memcpy(&v, bytes.data() + payload_offset + (i * cols + j) * sizeof(double),
                            sizeof(double));
                out.ensemble.samples(Eigen::Index(i), Eigen::Index(j)) = v;
            }
    } catch (const json::exception& e) {
        throw ContainerError(std::string("bad container metadata: ") + e.what());
    }
    return out;
}

void save_model(const PosteriorEnsemble& ens, const std::string& path,
                const ModelExtras& extras) {
    const std::string bytes = encode_model(ens, extras);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw DataError("failed writing '" + path + "'");
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return decode_model(buffer.str());
}

// ---------------------------------------------------------------------------
// Config files

EnsembleConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    static const std::vector<std::string> known = {
        "n_members",       "hidden_layers",
        "activation",      "epochs",
        "validation_split", "lr",
        "weight_decay",    "patience",
        "warmup_steps",    "n_samples",
        "n_thinning",      "desired_energy_var_start",
        "desired_energy_var_end", "prior_std",
        "master_seed",     "max_workers",
    };
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key '" + key + "'");
    }

    EnsembleConfig cfg;
    try {
        if (j.contains("n_members")) cfg.n_members = j["n_members"].get<int>();
        if (j.contains("hidden_layers"))
            cfg.net.hidden_layers = j["hidden_layers"].get<std::vector<int>>();
        if (j.contains("activation"))
            cfg.net.activation = activation_from(j["activation"].get<std::string>());
        if (j.contains("epochs")) cfg.opt.epochs = j["epochs"].get<long>();
        if (j.contains("validation_split"))
            cfg.opt.validation_split = j["validation_split"].get<double>();
        if (j.contains("lr")) cfg.opt.lr = j["lr"].get<double>();
        if (j.contains("weight_decay")) cfg.opt.weight_decay = j["weight_decay"].get<double>();
        if (j.contains("patience")) cfg.opt.patience = j["patience"].get<long>();
        if (j.contains("warmup_steps"))
            cfg.sampler.warmup_steps = j["warmup_steps"].get<long>();
        if (j.contains("n_samples")) cfg.sampler.n_samples = j["n_samples"].get<long>();
        if (j.contains("n_thinning")) cfg.sampler.n_thinning = j["n_thinning"].get<long>();
        if (j.contains("desired_energy_var_start"))
            cfg.sampler.energy_var_start = j["desired_energy_var_start"].get<double>();
        if (j.contains("desired_energy_var_end"))
            cfg.sampler.energy_var_end = j["desired_energy_var_end"].get<double>();
        if (j.contains("prior_std"))
            cfg.sampler.prior.prior_std = j["prior_std"].get<double>();
        if (j.contains("master_seed"))
            cfg.master_seed = j["master_seed"].get<std::uint64_t>();
        if (j.contains("max_workers")) cfg.max_workers = j["max_workers"].get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

EnsembleConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_json(buffer.str());
}

}  // namespace bde
