#include "microvol/cache.hpp"

#include "microvol/errors.hpp"

namespace microvol {

ModelCache::ModelCache(std::size_t capacity, bool record_evictions)
    : capacity_(capacity), record_evictions_(record_evictions) {
    if (capacity_ == 0) throw DomainError("cache capacity must be positive");
}

std::size_t ModelCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

BlockHandle ModelCache::query(const BlockAddress& a) {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(a);
    if (it == entries_.end()) {
        misses_.fetch_add(1);
        return nullptr;
    }
    hits_.fetch_add(1);
    order_.splice(order_.end(), order_, it->second.position);
    return it->second.block;
}

bool ModelCache::touch(const BlockAddress& a) {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(a);
    if (it == entries_.end()) return false;
    order_.splice(order_.end(), order_, it->second.position);
    return true;
}

bool ModelCache::contains(const BlockAddress& a) const {
    std::lock_guard lock(mutex_);
    return entries_.contains(a);
}

BlockHandle ModelCache::peek(const BlockAddress& a) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(a);
    return it == entries_.end() ? nullptr : it->second.block;
}

bool ModelCache::insert_locked(const BlockAddress& a, BlockHandle block) {
    if (const auto it = entries_.find(a); it != entries_.end()) {
        it->second.block = std::move(block);
        order_.splice(order_.end(), order_, it->second.position);
        return true;
    }
    if (entries_.size() >= capacity_) {
        auto victim = order_.begin();
        while (victim != order_.end() && pinned_.contains(*victim)) ++victim;
        if (victim == order_.end()) return false;
        if (record_evictions_) evicted_.push_back(*victim);
        entries_.erase(*victim);
        order_.erase(victim);
        evictions_.fetch_add(1);
    }
    const std::size_t bytes = block ? block->storage_bytes() : 0;
    order_.push_back(a);
    entries_.emplace(a, Entry{std::move(block), std::prev(order_.end())});
    loads_.fetch_add(1);
    bytes_.fetch_add(bytes);
    return true;
}

void ModelCache::insert(const BlockAddress& a, BlockHandle block) {
    std::lock_guard lock(mutex_);
    if (!insert_locked(a, std::move(block))) {
        throw CapacityError("cache full of pinned blocks (capacity " + std::to_string(capacity_) +
                            "), cannot admit " + a.to_string());
    }
}

bool ModelCache::try_insert(const BlockAddress& a, BlockHandle block) {
    std::lock_guard lock(mutex_);
    return insert_locked(a, std::move(block));
}

void ModelCache::pin(const std::vector<BlockAddress>& addresses) {
    std::lock_guard lock(mutex_);
    pinned_.clear();
    pinned_.insert(addresses.begin(), addresses.end());
}

void ModelCache::unpin_all() {
    std::lock_guard lock(mutex_);
    pinned_.clear();
}

std::vector<BlockAddress> ModelCache::recency_order() const {
    std::lock_guard lock(mutex_);
    return {order_.begin(), order_.end()};
}

std::vector<BlockAddress> ModelCache::eviction_log() const {
    std::lock_guard lock(mutex_);
    return evicted_;
}

CacheCounters ModelCache::counters() const {
    return {hits_.load(), misses_.load(), evictions_.load(), loads_.load(), bytes_.load()};
}

}  // namespace microvol
