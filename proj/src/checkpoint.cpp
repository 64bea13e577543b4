#include "drk/checkpoint.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

#include "drk/dten.hpp"

namespace drk {

namespace {

constexpr std::uint8_t kVersion = 0x01;

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor<double>*>>& entries) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(path + ": cannot open for writing");
    detail::write_bytes(os, "DCKP", 4);
    detail::write_bytes(os, &kVersion, 1);
    const std::uint32_t count = static_cast<std::uint32_t>(entries.size());
    detail::write_bytes(os, &count, 4);
    for (const auto& [name, tensor] : entries) {
        if (name.size() > 0xffff) throw ValueError("checkpoint: entry name too long: " + name);
        const std::uint16_t len = static_cast<std::uint16_t>(name.size());
        detail::write_bytes(os, &len, 2);
        detail::write_bytes(os, name.data(), name.size());
        write_dten(os, *tensor);
    }
    if (!os) throw IoError(path + ": write failed");
}

std::vector<std::pair<std::string, Tensor<double>>> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(path + ": cannot open");
    char magic[4];
    detail::read_bytes(is, magic, 4, path);
    if (std::memcmp(magic, "DCKP", 4) != 0) throw IoError(path + ": bad DCKP magic");
    std::uint8_t version = 0;
    detail::read_bytes(is, &version, 1, path);
    if (version != kVersion) throw IoError(path + ": unsupported DCKP version " + std::to_string(version));
    std::uint32_t count = 0;
    detail::read_bytes(is, &count, 4, path);
    std::vector<std::pair<std::string, Tensor<double>>> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t len = 0;
        detail::read_bytes(is, &len, 2, path);
        std::string name(len, '\0');
        if (len) detail::read_bytes(is, name.data(), len, path);
        AnyTensor any = read_dten(is, path + " [" + name + "]");
        if (!std::holds_alternative<Tensor<double>>(any))
            throw IoError(path + ": entry " + name + " is not an f64 tensor");
        entries.emplace_back(std::move(name), std::get<Tensor<double>>(std::move(any)));
    }
    char extra;
    if (is.read(&extra, 1), is.gcount() != 0) throw IoError(path + ": trailing data after DCKP payload");
    return entries;
}

void save_model(const std::string& path, const MicroModel& m) {
    Tensor<double> cfg = Tensor<double>::from_values(
        Shape{6},
        {static_cast<double>(m.cfg.channels), static_cast<double>(m.cfg.attr_dim),
         static_cast<double>(m.cfg.kernel), static_cast<double>(m.cfg.reduction),
         m.cfg.use_deform ? 1.0 : 0.0, m.cfg.use_se ? 1.0 : 0.0});
    std::vector<std::pair<std::string, const Tensor<double>*>> entries;
    entries.emplace_back("config", &cfg);
    for (const auto& [name, tensor] : m.named_tensors()) entries.emplace_back(name, tensor);
    save_checkpoint(path, entries);
}

MicroModel load_model(const std::string& path) {
    auto entries = load_checkpoint(path);
    if (entries.empty() || entries[0].first != "config")
        throw IoError(path + ": model checkpoint must start with a config entry");
    const Tensor<double>& c = entries[0].second;
    if (c.shape.rank() != 1 || c.shape.dim(0) != 6) throw IoError(path + ": malformed config entry");
    ModelConfig cfg;
    cfg.channels = static_cast<long>(std::llround(c.data[0]));
    cfg.attr_dim = static_cast<long>(std::llround(c.data[1]));
    cfg.kernel = static_cast<int>(std::llround(c.data[2]));
    cfg.reduction = static_cast<int>(std::llround(c.data[3]));
    cfg.use_deform = c.data[4] != 0.0;
    cfg.use_se = c.data[5] != 0.0;
    MicroModel m = make_model(cfg, 0);

    std::size_t used = 1;
    for (NamedParam p : m.params()) {
        bool found = false;
        for (std::size_t i = 1; i < entries.size(); ++i) {
            if (entries[i].first != p.name) continue;
            if (entries[i].second.shape != p.value->shape)
                throw IoError(path + ": entry " + p.name + " has shape " + entries[i].second.shape.str() +
                              ", expected " + p.value->shape.str());
            *p.value = std::move(entries[i].second);
            entries[i].first.clear();
            found = true;
            ++used;
            break;
        }
        if (!found) throw IoError(path + ": missing parameter " + p.name);
    }
    if (used != entries.size()) {
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (!entries[i].first.empty()) throw IoError(path + ": unexpected entry " + entries[i].first);
    }
    return m;
}

}  // namespace drk
