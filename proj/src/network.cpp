#include "epnr/network.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "epnr/common.hpp"

namespace epnr {

namespace {

constexpr std::array<std::string_view, kComponentKinds> kKindNames = {"substation", "transmission",
                                                                       "distribution"};

}  // namespace

std::string_view to_string(ComponentKind kind) { return kKindNames.at(static_cast<std::size_t>(kind)); }

ComponentKind component_kind_from_string(std::string_view name) {
    for (std::size_t k = 0; k < kKindNames.size(); ++k)
        if (kKindNames[k] == name) return static_cast<ComponentKind>(k);
    throw ParseError("unknown component kind '" + std::string(name) + "'");
}

Network::Network(std::vector<Component> components, std::vector<GridCell> cells)
    : components_(std::move(components)), cells_(std::move(cells)) {
    const auto n = static_cast<int>(components_.size());
    if (n == 0) throw ConfigError("network has no components");

    parent_.assign(components_.size(), -1);
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const auto& c = components_[static_cast<std::size_t>(i)];
        if (c.id != i) throw ConfigError("component ids must be 0..L-1 in order (got " + std::to_string(c.id) +
                                         " at position " + std::to_string(i) + ")");
        if (c.kind == ComponentKind::Substation) {
            if (c.parent) throw ConfigError("the substation must not have a parent");
            substation_ = i;
            ++roots;
        } else {
            if (!c.parent) throw ConfigError("component " + std::to_string(i) + " has no parent");
            if (*c.parent < 0 || *c.parent >= n || *c.parent == i)
                throw ConfigError("component " + std::to_string(i) + " has invalid parent");
            parent_[static_cast<std::size_t>(i)] = *c.parent;
        }
    }
    if (roots != 1) throw ConfigError("network needs exactly one substation, found " + std::to_string(roots));

    // Depth-first order from the root; anything unreached sits on a cycle.
    std::vector<std::vector<int>> children(components_.size());
    for (int i = 0; i < n; ++i)
        if (parent_[static_cast<std::size_t>(i)] >= 0)
            children[static_cast<std::size_t>(parent_[static_cast<std::size_t>(i)])].push_back(i);
    topo_order_.reserve(components_.size());
    std::vector<int> stack{substation_};
    while (!stack.empty()) {
        const int c = stack.back();
        stack.pop_back();
        topo_order_.push_back(c);
        for (int child : children[static_cast<std::size_t>(c)]) stack.push_back(child);
    }
    if (topo_order_.size() != components_.size()) throw ConfigError("parent references contain a cycle");

    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto& cell = cells_[i];
        if (cell.id != static_cast<int>(i)) throw ConfigError("cell ids must be 0..n-1 in order");
        if (cell.population < 0) throw ConfigError("cell " + std::to_string(i) + " has negative population");
        if (cell.serving_leaf < 0 || cell.serving_leaf >= n ||
            components_[static_cast<std::size_t>(cell.serving_leaf)].kind != ComponentKind::DistributionSegment)
            throw ConfigError("cell " + std::to_string(i) + " must be served by a distribution segment");
        total_population_ += cell.population;
    }
}

std::size_t Network::count(ComponentKind kind) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(components_.begin(), components_.end(), [kind](const Component& c) { return c.kind == kind; }));
}

bool Network::is_functional(std::span<const std::uint8_t> damaged, int c) const {
    if (c < 0 || static_cast<std::size_t>(c) >= size()) throw ContractViolation("component id out of range");
    if (damaged.size() != size()) throw ContractViolation("damage mask length must equal L");
    for (int at = c; at >= 0; at = parent_[static_cast<std::size_t>(at)])
        if (damaged[static_cast<std::size_t>(at)]) return false;
    return true;
}

std::int64_t Network::powered_population(std::span<const std::uint8_t> damaged) const {
    if (damaged.size() != size()) throw ContractViolation("damage mask length must equal L");
    return powered_population_by([&](int c) { return damaged[static_cast<std::size_t>(c)] != 0; });
}

Network build_synthetic_network(int n_cells, int transmission_len, double segment_spacing_m,
                                std::span<const std::int64_t> populations, const GridLayout& layout) {
    if (n_cells < 1) throw ConfigError("n_cells must be >= 1");
    if (transmission_len < 1) throw ConfigError("transmission_len must be >= 1");
    if (static_cast<int>(populations.size()) != n_cells)
        throw ConfigError("populations must have one entry per cell");
    if (!(segment_spacing_m > 0.0)) throw ConfigError("segment_spacing_m must be positive");
    if (!(layout.cell_size_m > 0.0)) throw ConfigError("cell_size_m must be positive");
    if (layout.columns < 0) throw ConfigError("columns must be >= 0");

    const int columns =
        layout.columns > 0 ? layout.columns : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_cells))));
    const int rows = (n_cells + columns - 1) / columns;
    const double centre_x = columns / 2.0;
    const double centre_y = rows / 2.0;

    std::vector<Component> components;
    components.push_back({0, ComponentKind::Substation, std::nullopt});
    for (int t = 0; t < transmission_len; ++t)
        components.push_back({t + 1, ComponentKind::TransmissionSegment, t});
    const int trunk = transmission_len;

    std::vector<GridCell> cells;
    cells.reserve(static_cast<std::size_t>(n_cells));
    for (int i = 0; i < n_cells; ++i) {
        const double dx = std::abs((i % columns) + 0.5 - centre_x);
        const double dy = std::abs((i / columns) + 0.5 - centre_y);
        const double metres = (dx + dy) * layout.cell_size_m;
        const long segments = std::max(1L, std::lround(metres / segment_spacing_m));
        int parent = trunk;
        for (long s = 0; s < segments; ++s) {
            const int id = static_cast<int>(components.size());
            components.push_back({id, ComponentKind::DistributionSegment, parent});
            parent = id;
        }
        cells.push_back({i, populations[static_cast<std::size_t>(i)], parent});
    }
    return Network(std::move(components), std::move(cells));
}

std::vector<std::int64_t> gilroy_like_populations() {
    return {453,  974,  927,  1196, 1320, 560,  695,  970,  2539, 2652, 1268, 1158,
            759,  2218, 2256, 2504, 3081, 1193, 825,  1080, 2757, 3280, 1474, 1229,
            480,  1277, 1406, 1317, 1702, 792,  379,  434,  777,  989,  541,  443};
}

Network gilroy_like_network() {
    const auto pops = gilroy_like_populations();
    return build_synthetic_network(36, 2, 100.0, pops, GridLayout{300.0, 6});
}

Network desk_network() {
    const std::vector<std::int64_t> pops = {1800, 2600, 1500, 3100, 4200, 2400, 1300, 2000, 1100};
    return build_synthetic_network(9, 2, 100.0, pops, GridLayout{467.0, 3});
}

nlohmann::ordered_json to_json(const Network& net) {
    nlohmann::ordered_json doc;
    doc["components"] = nlohmann::ordered_json::array();
    for (const auto& c : net.components()) {
        nlohmann::ordered_json item;
        item["id"] = c.id;
        item["kind"] = to_string(c.kind);
        item["parent"] = c.parent ? nlohmann::ordered_json(*c.parent) : nlohmann::ordered_json(nullptr);
        doc["components"].push_back(std::move(item));
    }
    doc["cells"] = nlohmann::ordered_json::array();
    for (const auto& cell : net.cells()) {
        nlohmann::ordered_json item;
        item["id"] = cell.id;
        item["population"] = cell.population;
        item["serving_leaf"] = cell.serving_leaf;
        doc["cells"].push_back(std::move(item));
    }
    return doc;
}

Network network_from_json(const nlohmann::json& doc) {
    try {
        std::vector<Component> components;
        for (const auto& item : doc.at("components")) {
            Component c;
            c.id = item.at("id").get<int>();
            c.kind = component_kind_from_string(item.at("kind").get<std::string>());
            if (!item.at("parent").is_null()) c.parent = item.at("parent").get<int>();
            components.push_back(c);
        }
        std::vector<GridCell> cells;
        for (const auto& item : doc.at("cells"))
            cells.push_back({item.at("id").get<int>(), item.at("population").get<std::int64_t>(),
                             item.at("serving_leaf").get<int>()});
        return Network(std::move(components), std::move(cells));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("network document: ") + e.what());
    }
}

}  // namespace epnr
