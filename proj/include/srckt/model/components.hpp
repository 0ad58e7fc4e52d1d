#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "srckt/model/config.hpp"

namespace srckt {

enum class Block : std::uint8_t { Mab1 = 1, Mab2 = 2 };

// One patchable unit of the encoder: an attention head's output, a
// feed-forward block's output, or the output projection (OUT).
struct ComponentId {
    enum class Kind : std::uint8_t { Head, Mlp, Out };

    Kind kind = Kind::Out;
    int layer = 0; // 1-based; 0 for OUT
    Block block = Block::Mab1;
    int head = 0; // 1-based; 0 unless kind == Head

    static ComponentId attention_head(int layer, Block block, int head) { return {Kind::Head, layer, block, head}; }
    static ComponentId mlp(int layer, Block block) { return {Kind::Mlp, layer, block, 0}; }
    static ComponentId out() { return {Kind::Out, 0, Block::Mab1, 0}; }

    // "L1.2.H1", "L2.1.MLP", "OUT"
    std::string name() const;
    // Throws ConfigError on malformed names.
    static ComponentId parse(std::string_view name);

    friend bool operator==(const ComponentId&, const ComponentId&) = default;
};

// Layers ascending, MAB1 before MAB2, heads ascending then MLP, OUT last.
std::vector<ComponentId> component_ids(const ModelConfig& config);
std::size_t component_count(const ModelConfig& config);
std::size_t component_index(const ModelConfig& config, const ComponentId& id);

// Fixed-size set of component indices.
class ComponentSet {
public:
    ComponentSet() = default;
    explicit ComponentSet(std::size_t universe, bool all = false) : bits_(universe, all ? 1 : 0) {}

    static ComponentSet from_names(const ModelConfig& config, const std::vector<std::string>& names);

    std::size_t universe() const { return bits_.size(); }
    bool contains(std::size_t i) const { return bits_[i] != 0; }
    void insert(std::size_t i) { bits_[i] = 1; }
    void erase(std::size_t i) { bits_[i] = 0; }
    void set(std::size_t i, bool on) { bits_[i] = on ? 1 : 0; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }

    ComponentSet complement() const;
    ComponentSet with(std::size_t i) const;
    ComponentSet without(std::size_t i) const;
    ComponentSet unite(const ComponentSet& other) const;
    ComponentSet intersect(const ComponentSet& other) const;
    bool subset_of(const ComponentSet& other) const;
    std::vector<std::size_t> indices() const;
    std::vector<std::string> names(const ModelConfig& config) const;
    // Bit i of the integer is component i; hex, most significant digit first.
    std::string to_hex() const;
    // Raw bytes (one per component), used as a cache key.
    const std::string& key() const { return bits_; }

    friend bool operator==(const ComponentSet&, const ComponentSet&) = default;

private:
    std::string bits_;
};

} // namespace srckt
