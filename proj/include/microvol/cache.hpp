#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "microvol/block_source.hpp"
#include "microvol/lod.hpp"

namespace microvol {

struct CacheCounters {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
    std::uint64_t loads = 0;
    std::uint64_t bytes_loaded = 0;
};

/// Count-bounded LRU cache of decoded blocks. Pinned entries (the current
/// frame's visible set) are never evicted. Every operation takes the internal
/// mutex; counters are atomic and may be read at any time.
class ModelCache {
public:
    /// `record_evictions` keeps an unbounded eviction log (for tests).
    explicit ModelCache(std::size_t capacity, bool record_evictions = false);

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const;

    /// Visibility query: returns the handle and marks it most recent (hit),
    /// or nullptr (miss). Updates hit/miss counters.
    BlockHandle query(const BlockAddress& a);
    /// Marks an entry most recent without counting; false if absent.
    bool touch(const BlockAddress& a);
    bool contains(const BlockAddress& a) const;
    /// Handle without recency or counter changes.
    BlockHandle peek(const BlockAddress& a) const;

    /// Inserts (or replaces) as most recent, evicting the least recent unpinned
    /// entry when full. Throws CapacityError if every resident entry is pinned.
    void insert(const BlockAddress& a, BlockHandle block);
    /// As insert, but returns false instead of throwing when nothing is evictable.
    bool try_insert(const BlockAddress& a, BlockHandle block);

    /// Replaces the pinned set. Pinned addresses need not be resident yet.
    void pin(const std::vector<BlockAddress>& addresses);
    void unpin_all();

    /// Resident addresses, least recent first.
    std::vector<BlockAddress> recency_order() const;
    /// Eviction victims, oldest first; empty unless recording was requested.
    std::vector<BlockAddress> eviction_log() const;

    CacheCounters counters() const;

private:
    using Order = std::list<BlockAddress>;
    struct Entry {
        BlockHandle block;
        Order::iterator position;
    };

    bool insert_locked(const BlockAddress& a, BlockHandle block);

    std::size_t capacity_;
    bool record_evictions_;
    mutable std::mutex mutex_;
    Order order_;  // front = least recent
    std::unordered_map<BlockAddress, Entry, BlockAddressHash> entries_;
    std::unordered_set<BlockAddress, BlockAddressHash> pinned_;
    std::vector<BlockAddress> evicted_;

    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::atomic<std::uint64_t> evictions_{0};
    std::atomic<std::uint64_t> loads_{0};
    std::atomic<std::uint64_t> bytes_{0};
};

}  // namespace microvol
