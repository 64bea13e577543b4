#include "drk/config.hpp"

#include <charconv>
#include <fstream>

namespace drk {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

long parse_long(const std::string& key, const std::string& v) {
    long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ValueError("config: key " + key + " expects an integer, got '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ValueError("config: key " + key + " expects an unsigned integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ValueError("config: key " + key + " expects a number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValueError("config: key " + key + " expects true/false, got '" + v + "'");
}

std::vector<long> parse_long_list(const std::string& key, const std::string& v) {
    std::vector<long> out;
    if (trim(v).empty()) return out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        std::size_t comma = v.find(',', pos);
        std::string item = trim(v.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        out.push_back(parse_long(key, item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(path + ": cannot open");
    std::map<std::string, std::string> kv;
    std::string line;
    long lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ValueError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ValueError(path + ":" + std::to_string(lineno) + ": empty key");
        if (kv.count(key)) throw ValueError(path + ":" + std::to_string(lineno) + ": duplicate key " + key);
        kv[key] = value;
    }
    return kv;
}

void apply_train_config(TrainConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, v] : kv) {
        if (key == "epochs") cfg.epochs = parse_long(key, v);
        else if (key == "batch") cfg.batch = parse_long(key, v);
        else if (key == "seed") cfg.seed = parse_u64(key, v);
        else if (key == "base_lr") cfg.base_lr = parse_double(key, v);
        else if (key == "decay") cfg.decay = parse_double(key, v);
        else if (key == "milestones") cfg.milestones = parse_long_list(key, v);
        else if (key == "clip_max_norm") cfg.clip_max_norm = parse_double(key, v);
        else if (key == "eval_every_epoch") cfg.eval_every_epoch = parse_bool(key, v);
        else if (key == "channels") cfg.model.channels = parse_long(key, v);
        else if (key == "kernel") cfg.model.kernel = static_cast<int>(parse_long(key, v));
        else if (key == "reduction") cfg.model.reduction = static_cast<int>(parse_long(key, v));
        else if (key == "use_deform") cfg.model.use_deform = parse_bool(key, v);
        else if (key == "use_se") cfg.model.use_se = parse_bool(key, v);
        else if (key == "lambda1") cfg.raf.lambda1 = parse_double(key, v);
        else if (key == "lambda2") cfg.raf.lambda2 = parse_double(key, v);
        else if (key == "lambda3") cfg.raf.lambda3 = parse_double(key, v);
        else if (key == "alpha") cfg.raf.alpha = parse_double(key, v);
        else if (key == "gamma") cfg.raf.gamma = parse_double(key, v);
        else if (key == "eps") cfg.raf.eps = parse_double(key, v);
        else if (key == "clamp") cfg.raf.clamp = parse_double(key, v);
        else if (key == "adaptive_mode") {
            if (v == "abs_diff") cfg.raf.adaptive_mode = AdaptiveMode::abs_diff;
            else if (v == "focal_style") cfg.raf.adaptive_mode = AdaptiveMode::focal_style;
            else throw ValueError("config: adaptive_mode must be abs_diff or focal_style, got '" + v + "'");
        } else if (key == "normalize") {
            if (v == "sum") cfg.raf.normalize = Normalize::sum;
            else if (v == "mean") cfg.raf.normalize = Normalize::mean;
            else throw ValueError("config: normalize must be sum or mean, got '" + v + "'");
        } else {
            throw ValueError("config: unknown key " + key);
        }
    }
}

}  // namespace drk
