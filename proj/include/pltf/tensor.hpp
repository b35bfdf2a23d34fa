#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pltf {

using Index = std::uint32_t;

/// One observed cell of the relational tensor.
struct Entry {
    Index i = 0;
    Index j = 0;
    Index t = 0;
    std::uint8_t value = 0;

    friend bool operator==(const Entry&, const Entry&) = default;
};

/// Ordered object pair; (i, j) and (j, i) are different fibers.
struct FiberKey {
    Index i = 0;
    Index j = 0;

    friend bool operator==(const FiberKey&, const FiberKey&) = default;
    friend auto operator<=>(const FiberKey&, const FiberKey&) = default;
};

/// Observation state of a single cell.
enum class Cell : std::int8_t { Missing = -1, Zero = 0, One = 1 };

/// Length-T view of one tube fiber.
using LinkPattern = std::vector<Cell>;

class SliceView;

/// Grouping of entry positions by one coordinate. Positions of group g are
/// `order[offsets[g] .. offsets[g + 1])`, in ascending entry order.
struct EntryGrouping {
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> order;

    std::span<const std::uint32_t> group(std::size_t g) const {
        return {order.data() + offsets[g], offsets[g + 1] - offsets[g]};
    }
};

/**
 * Sparse binary N x N x T tensor with an explicit observation mask.
 *
 * Entries are kept as a coordinate list sorted by (i, j, t) with a hash index
 * from fiber key to its run of entries. Any (i, j, t) not stored is
 * unobserved. Instances are immutable and cheap to copy; every read through
 * the public accessors bumps an access counter that tests use to detect
 * leakage between train and test data.
 */
class RelationalTensor {
  public:
    /// Validates and deduplicates `triples`. Throws IndexError on out of
    /// range coordinates or values, ConflictError on contradictory duplicates.
    static RelationalTensor build(std::size_t n_objects, std::size_t n_relations,
                                  std::span<const Entry> triples);

    std::size_t n_objects() const { return impl_->n_objects; }
    std::size_t n_relations() const { return impl_->n_relations; }
    std::size_t observed_count() const { return impl_->entries.size(); }
    bool empty() const { return impl_->entries.empty(); }

    /// All observed entries sorted by (i, j, t).
    std::span<const Entry> entries() const;

    Cell value_at(std::size_t i, std::size_t j, std::size_t t) const;
    bool is_observed(std::size_t i, std::size_t j, std::size_t t) const {
        return value_at(i, j, t) != Cell::Missing;
    }

    LinkPattern fiber(FiberKey key) const;
    SliceView slice(std::size_t t) const;

    /// Keys of fibers holding at least one observation, ascending.
    std::vector<FiberKey> observed_fibers() const;

    /// Entry positions grouped by sender i (N groups).
    const EntryGrouping& by_sender() const;
    /// Entry positions grouped by receiver j (N groups).
    const EntryGrouping& by_receiver() const;
    /// Entry positions grouped by relation t (T groups).
    const EntryGrouping& by_relation() const;

    std::uint64_t access_count() const {
        return impl_->accesses.load(std::memory_order_relaxed);
    }

  private:
    struct Impl {
        std::size_t n_objects = 0;
        std::size_t n_relations = 0;
        std::vector<Entry> entries;
        std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> fiber_index;
        EntryGrouping senders;
        EntryGrouping receivers;
        EntryGrouping relations;
        mutable std::atomic<std::uint64_t> accesses{0};
    };

    explicit RelationalTensor(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

    void touch() const { impl_->accesses.fetch_add(1, std::memory_order_relaxed); }
    void check_pair(std::size_t i, std::size_t j) const;
    std::span<const Entry> fiber_entries(std::size_t i, std::size_t j) const;

    std::shared_ptr<const Impl> impl_;

    friend class SliceView;
};

/// Read-only N x N view of one relation slice with the same mask semantics.
class SliceView {
  public:
    std::size_t n_objects() const { return tensor_.n_objects(); }
    std::size_t relation() const { return t_; }
    std::size_t observed_count() const { return positions_.size(); }

    Cell value_at(std::size_t i, std::size_t j) const {
        return tensor_.value_at(i, j, t_);
    }

    /// Entries of this slice in (i, j) order; `t` keeps the original index.
    std::vector<Entry> entries() const;

    /// The slice as a standalone T = 1 tensor.
    RelationalTensor to_tensor() const;

  private:
    SliceView(RelationalTensor tensor, std::size_t t);

    RelationalTensor tensor_;
    std::size_t t_;
    std::span<const std::uint32_t> positions_;

    friend class RelationalTensor;
};

/// Moves every observed entry of the named fibers into the second tensor.
std::pair<RelationalTensor, RelationalTensor> hide_fibers(const RelationalTensor& tensor,
                                                          std::span<const FiberKey> keys);

} // namespace pltf
