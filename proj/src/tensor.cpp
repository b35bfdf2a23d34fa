#include "pltf/tensor.hpp"

#include "pltf/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <tuple>

namespace pltf {
namespace {

std::uint64_t pair_key(std::size_t i, std::size_t j) {
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

std::string coords(const Entry& e) {
    return "(" + std::to_string(e.i) + ", " + std::to_string(e.j) + ", " + std::to_string(e.t) + ")";
}

template <typename Key>
EntryGrouping group_entries(const std::vector<Entry>& entries, std::size_t groups, Key key) {
    EntryGrouping g;
    g.offsets.assign(groups + 1, 0);
    for (const Entry& e : entries)
        ++g.offsets[key(e) + 1];
    std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
    g.order.resize(entries.size());
    std::vector<std::size_t> cursor(g.offsets.begin(), g.offsets.end() - 1);
    // Stable counting sort keeps ascending entry order inside every group.
    for (std::size_t p = 0; p < entries.size(); ++p)
        g.order[cursor[key(entries[p])]++] = static_cast<std::uint32_t>(p);
    return g;
}

} // namespace

RelationalTensor RelationalTensor::build(std::size_t n_objects, std::size_t n_relations,
                                         std::span<const Entry> triples) {
    if (n_objects == 0 || n_relations == 0)
        throw IndexError("tensor dimensions must be positive");
    if (n_objects > 0xffffffffu || n_relations > 0xffffffffu || triples.size() > 0xffffffffu)
        throw IndexError("tensor too large for 32-bit indexing");

    auto impl = std::make_shared<Impl>();
    impl->n_objects = n_objects;
    impl->n_relations = n_relations;

    std::vector<Entry> sorted(triples.begin(), triples.end());
    for (const Entry& e : sorted) {
        if (e.i >= n_objects || e.j >= n_objects || e.t >= n_relations)
            throw IndexError("entry " + coords(e) + " outside " + std::to_string(n_objects) + "x" +
                             std::to_string(n_objects) + "x" + std::to_string(n_relations));
        if (e.value > 1)
            throw IndexError("entry " + coords(e) + " has value " + std::to_string(e.value) +
                             ", expected 0 or 1");
    }
    std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
        return std::tie(a.i, a.j, a.t) < std::tie(b.i, b.j, b.t);
    });

    impl->entries.reserve(sorted.size());
    for (const Entry& e : sorted) {
        if (!impl->entries.empty()) {
            const Entry& last = impl->entries.back();
            if (last.i == e.i && last.j == e.j && last.t == e.t) {
                if (last.value != e.value)
                    throw ConflictError("conflicting values for entry " + coords(e));
                continue;
            }
        }
        impl->entries.push_back(e);
    }

    const auto& es = impl->entries;
    for (std::size_t p = 0; p < es.size();) {
        std::size_t q = p;
        while (q < es.size() && es[q].i == es[p].i && es[q].j == es[p].j)
            ++q;
        impl->fiber_index.emplace(pair_key(es[p].i, es[p].j),
                                  std::pair{static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q)});
        p = q;
    }

    impl->senders = group_entries(es, n_objects, [](const Entry& e) { return e.i; });
    impl->receivers = group_entries(es, n_objects, [](const Entry& e) { return e.j; });
    impl->relations = group_entries(es, n_relations, [](const Entry& e) { return e.t; });

    return RelationalTensor(std::move(impl));
}

std::span<const Entry> RelationalTensor::entries() const {
    touch();
    return impl_->entries;
}

void RelationalTensor::check_pair(std::size_t i, std::size_t j) const {
    if (i >= impl_->n_objects || j >= impl_->n_objects)
        throw IndexError("object pair (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") out of range for N=" + std::to_string(impl_->n_objects));
}

std::span<const Entry> RelationalTensor::fiber_entries(std::size_t i, std::size_t j) const {
    auto it = impl_->fiber_index.find(pair_key(i, j));
    if (it == impl_->fiber_index.end())
        return {};
    return std::span<const Entry>(impl_->entries).subspan(it->second.first,
                                                          it->second.second - it->second.first);
}

Cell RelationalTensor::value_at(std::size_t i, std::size_t j, std::size_t t) const {
    check_pair(i, j);
    if (t >= impl_->n_relations)
        throw IndexError("relation " + std::to_string(t) + " out of range for T=" +
                         std::to_string(impl_->n_relations));
    touch();
    for (const Entry& e : fiber_entries(i, j))
        if (e.t == t)
            return e.value ? Cell::One : Cell::Zero;
    return Cell::Missing;
}

LinkPattern RelationalTensor::fiber(FiberKey key) const {
    check_pair(key.i, key.j);
    touch();
    LinkPattern pattern(impl_->n_relations, Cell::Missing);
    for (const Entry& e : fiber_entries(key.i, key.j))
        pattern[e.t] = e.value ? Cell::One : Cell::Zero;
    return pattern;
}

SliceView RelationalTensor::slice(std::size_t t) const {
    if (t >= impl_->n_relations)
        throw IndexError("relation " + std::to_string(t) + " out of range for T=" +
                         std::to_string(impl_->n_relations));
    touch();
    return SliceView(*this, t);
}

std::vector<FiberKey> RelationalTensor::observed_fibers() const {
    touch();
    std::vector<FiberKey> keys;
    keys.reserve(impl_->fiber_index.size());
    const auto& es = impl_->entries;
    for (std::size_t p = 0; p < es.size(); ++p)
        if (p == 0 || es[p].i != es[p - 1].i || es[p].j != es[p - 1].j)
            keys.push_back({es[p].i, es[p].j});
    return keys;
}

const EntryGrouping& RelationalTensor::by_sender() const {
    touch();
    return impl_->senders;
}

const EntryGrouping& RelationalTensor::by_receiver() const {
    touch();
    return impl_->receivers;
}

const EntryGrouping& RelationalTensor::by_relation() const {
    touch();
    return impl_->relations;
}

SliceView::SliceView(RelationalTensor tensor, std::size_t t)
    : tensor_(std::move(tensor)), t_(t), positions_(tensor_.impl_->relations.group(t)) {}

std::vector<Entry> SliceView::entries() const {
    tensor_.touch();
    std::vector<Entry> out;
    out.reserve(positions_.size());
    for (std::uint32_t p : positions_)
        out.push_back(tensor_.impl_->entries[p]);
    return out;
}

RelationalTensor SliceView::to_tensor() const {
    std::vector<Entry> es = entries();
    for (Entry& e : es)
        e.t = 0;
    return RelationalTensor::build(tensor_.n_objects(), 1, es);
}

std::pair<RelationalTensor, RelationalTensor> hide_fibers(const RelationalTensor& tensor,
                                                          std::span<const FiberKey> keys) {
    const std::size_t n = tensor.n_objects();
    std::vector<std::uint64_t> hidden;
    hidden.reserve(keys.size());
    for (const FiberKey& k : keys) {
        if (k.i >= n || k.j >= n)
            throw IndexError("fiber (" + std::to_string(k.i) + ", " + std::to_string(k.j) +
                             ") out of range for N=" + std::to_string(n));
        hidden.push_back(pair_key(k.i, k.j));
    }
    std::sort(hidden.begin(), hidden.end());

    std::vector<Entry> train;
    std::vector<Entry> test;
    for (const Entry& e : tensor.entries()) {
        if (std::binary_search(hidden.begin(), hidden.end(), pair_key(e.i, e.j)))
            test.push_back(e);
        else
            train.push_back(e);
    }
    return {RelationalTensor::build(n, tensor.n_relations(), train),
            RelationalTensor::build(n, tensor.n_relations(), test)};
}

} // namespace pltf
