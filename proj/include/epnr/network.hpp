#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace epnr {

enum class ComponentKind : std::uint8_t { Substation = 0, TransmissionSegment = 1, DistributionSegment = 2 };

inline constexpr std::size_t kComponentKinds = 3;

std::string_view to_string(ComponentKind kind);
ComponentKind component_kind_from_string(std::string_view name);

struct Component {
    int id = 0;
    ComponentKind kind = ComponentKind::DistributionSegment;
    std::optional<int> parent;  // the component this one draws power from

    bool operator==(const Component&) const = default;
};

struct GridCell {
    int id = 0;
    std::int64_t population = 0;
    int serving_leaf = 0;  // distribution segment terminating at the cell

    bool operator==(const GridCell&) const = default;
};

/// Radial electric power network: a tree rooted at the single substation,
/// with population cells hanging off distribution leaves. A component is
/// functional iff it and every ancestor are undamaged. Immutable once built.
class Network {
public:
    /// Validates ids, the single parentless substation, the tree property and
    /// cell leaves. Throws ConfigError on violation.
    Network(std::vector<Component> components, std::vector<GridCell> cells);

    std::size_t size() const noexcept { return components_.size(); }
    std::span<const Component> components() const noexcept { return components_; }
    std::span<const GridCell> cells() const noexcept { return cells_; }
    const Component& component(int id) const { return components_.at(static_cast<std::size_t>(id)); }
    std::int64_t total_population() const noexcept { return total_population_; }
    int substation() const noexcept { return substation_; }
    std::size_t count(ComponentKind kind) const noexcept;

    /// `damaged` has one entry per component (nonzero = damaged).
    bool is_functional(std::span<const std::uint8_t> damaged, int c) const;
    std::int64_t powered_population(std::span<const std::uint8_t> damaged) const;

    /// Same as powered_population but reads damage through a predicate
    /// `is_damaged(int id) -> bool`, avoiding a mask copy in hot loops.
    template <class IsDamaged>
    std::int64_t powered_population_by(IsDamaged&& is_damaged) const {
        thread_local std::vector<std::uint8_t> live;
        live.resize(components_.size());
        for (int c : topo_order_) {
            const int p = parent_[static_cast<std::size_t>(c)];
            live[static_cast<std::size_t>(c)] =
                !is_damaged(c) && (p < 0 || live[static_cast<std::size_t>(p)]);
        }
        std::int64_t powered = 0;
        for (const auto& cell : cells_)
            if (live[static_cast<std::size_t>(cell.serving_leaf)]) powered += cell.population;
        return powered;
    }

    bool operator==(const Network& other) const {
        return components_ == other.components_ && cells_ == other.cells_;
    }

private:
    std::vector<Component> components_;
    std::vector<GridCell> cells_;
    std::vector<int> parent_;      // -1 for the root
    std::vector<int> topo_order_;  // parents before children
    std::int64_t total_population_ = 0;
    int substation_ = 0;
};

/// Geometry used to size the distribution chains of the synthetic generator.
/// Cells are laid out row-major on a grid of `columns` columns (0 = ceil(sqrt(n)))
/// and the substation sits at the grid centroid. Each cell is fed by its own
/// chain whose length is the Manhattan distance from the substation to the cell
/// centre divided by the segment spacing (rounded, at least one segment).
struct GridLayout {
    double cell_size_m = 300.0;
    int columns = 0;
};

/// Substation -> transmission chain -> one distribution chain per cell.
/// Component ids: 0 is the substation, 1..transmission_len the transmission
/// chain, then each cell's chain from trunk to leaf in cell order.
Network build_synthetic_network(int n_cells, int transmission_len, double segment_spacing_m,
                                std::span<const std::int64_t> populations,
                                const GridLayout& layout = {});

/// 36 cells, 47905 persons, 327 components.
Network gilroy_like_network();
std::vector<std::int64_t> gilroy_like_populations();

/// 9 cells, 60 components; the scale used for desk experiments.
Network desk_network();

/// {components:[{id,kind,parent}], cells:[{id,population,serving_leaf}]}
nlohmann::ordered_json to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);

}  // namespace epnr
