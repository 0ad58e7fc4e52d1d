#include "srckt/model/components.hpp"

#include <charconv>

#include "srckt/util/error.hpp"

namespace srckt {

std::string ComponentId::name() const {
    switch (kind) {
    case Kind::Out:
        return "OUT";
    case Kind::Mlp:
        return "L" + std::to_string(layer) + "." + std::to_string(static_cast<int>(block)) + ".MLP";
    case Kind::Head:
        return "L" + std::to_string(layer) + "." + std::to_string(static_cast<int>(block)) + ".H" +
               std::to_string(head);
    }
    return {};
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
        fail(ErrorCode::ConfigError, "bad component name: " + std::string(whole));
    }
    return v;
}

} // namespace

ComponentId ComponentId::parse(std::string_view name) {
    if (name == "OUT") return out();
    const auto bad = [&] { fail(ErrorCode::ConfigError, "bad component name: " + std::string(name)); };
    if (name.size() < 6 || name[0] != 'L') bad();
    const auto d1 = name.find('.');
    if (d1 == std::string_view::npos) bad();
    const auto d2 = name.find('.', d1 + 1);
    if (d2 == std::string_view::npos) bad();
    const int layer = parse_int(name.substr(1, d1 - 1), name);
    const int block = parse_int(name.substr(d1 + 1, d2 - d1 - 1), name);
    if (block != 1 && block != 2) bad();
    const auto part = name.substr(d2 + 1);
    const auto b = static_cast<Block>(block);
    if (part == "MLP") return mlp(layer, b);
    if (part.size() < 2 || part[0] != 'H') bad();
    return attention_head(layer, b, parse_int(part.substr(1), name));
}

std::vector<ComponentId> component_ids(const ModelConfig& config) {
    std::vector<ComponentId> ids;
    ids.reserve(component_count(config));
    for (int l = 1; l <= config.enc_layers; ++l) {
        for (Block b : {Block::Mab1, Block::Mab2}) {
            for (int h = 1; h <= config.heads_per_mab; ++h) ids.push_back(ComponentId::attention_head(l, b, h));
            ids.push_back(ComponentId::mlp(l, b));
        }
    }
    ids.push_back(ComponentId::out());
    return ids;
}

std::size_t component_count(const ModelConfig& config) {
    return static_cast<std::size_t>(config.enc_layers) * 2 * static_cast<std::size_t>(config.heads_per_mab + 1) + 1;
}

std::size_t component_index(const ModelConfig& config, const ComponentId& id) {
    const auto per_block = static_cast<std::size_t>(config.heads_per_mab + 1);
    if (id.kind == ComponentId::Kind::Out) return component_count(config) - 1;
    if (id.layer < 1 || id.layer > config.enc_layers) {
        fail(ErrorCode::MissingComponent, "component not in model: " + id.name());
    }
    const std::size_t base =
        (static_cast<std::size_t>(id.layer - 1) * 2 + (id.block == Block::Mab1 ? 0 : 1)) * per_block;
    if (id.kind == ComponentId::Kind::Mlp) return base + per_block - 1;
    if (id.head < 1 || id.head > config.heads_per_mab) {
        fail(ErrorCode::MissingComponent, "component not in model: " + id.name());
    }
    return base + static_cast<std::size_t>(id.head - 1);
}

ComponentSet ComponentSet::from_names(const ModelConfig& config, const std::vector<std::string>& names) {
    ComponentSet s(component_count(config));
    for (const auto& n : names) s.insert(component_index(config, ComponentId::parse(n)));
    return s;
}

std::size_t ComponentSet::count() const {
    std::size_t n = 0;
    for (char b : bits_) n += b != 0;
    return n;
}

ComponentSet ComponentSet::complement() const {
    ComponentSet s = *this;
    for (char& b : s.bits_) b = b ? 0 : 1;
    return s;
}

ComponentSet ComponentSet::with(std::size_t i) const {
    ComponentSet s = *this;
    s.insert(i);
    return s;
}

ComponentSet ComponentSet::without(std::size_t i) const {
    ComponentSet s = *this;
    s.erase(i);
    return s;
}

ComponentSet ComponentSet::unite(const ComponentSet& other) const {
    ComponentSet s = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i) s.bits_[i] = (bits_[i] || other.bits_[i]) ? 1 : 0;
    return s;
}

ComponentSet ComponentSet::intersect(const ComponentSet& other) const {
    ComponentSet s = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i) s.bits_[i] = (bits_[i] && other.bits_[i]) ? 1 : 0;
    return s;
}

bool ComponentSet::subset_of(const ComponentSet& other) const {
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] && !other.bits_[i]) return false;
    }
    return true;
}

std::vector<std::size_t> ComponentSet::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) out.push_back(i);
    }
    return out;
}

std::vector<std::string> ComponentSet::names(const ModelConfig& config) const {
    const auto ids = component_ids(config);
    std::vector<std::string> out;
    for (std::size_t i : indices()) out.push_back(ids.at(i).name());
    return out;
}

std::string ComponentSet::to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    const std::size_t nd = (bits_.size() + 3) / 4;
    std::string out(nd == 0 ? 1 : nd, '0');
    for (std::size_t d = 0; d < nd; ++d) {
        int v = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            const std::size_t i = d * 4 + b;
            if (i < bits_.size() && bits_[i]) v |= 1 << b;
        }
        out[out.size() - 1 - d] = digits[v];
    }
    return out;
}

} // namespace srckt
