#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>

#include "microvol/block.hpp"
#include "microvol/ds_block.hpp"
#include "microvol/encoder.hpp"
#include "microvol/lod.hpp"

namespace microvol {

using BlockHandle = std::shared_ptr<const VolumeBlock>;

/// Where decoded blocks come from. load() is safe to call concurrently.
class BlockSource {
public:
    virtual ~BlockSource() = default;

    virtual const LODManifest& manifest() const = 0;

    /// Runs the load hook, sleeps for the configured I/O delay, then decodes.
    BlockHandle load(const BlockAddress& a) const;

    /// Called at the start of every load, from the loading thread.
    void set_load_hook(std::function<void(const BlockAddress&)> hook) { hook_ = std::move(hook); }
    /// Artificial per-load latency, to make disk cost visible at desk scale.
    void set_io_delay(std::chrono::microseconds delay) { delay_ = delay; }
    std::uint64_t load_count() const { return loads_.load(); }

protected:
    virtual BlockHandle do_load(const BlockAddress& a) const = 0;

private:
    std::function<void(const BlockAddress&)> hook_;
    std::chrono::microseconds delay_{0};
    mutable std::atomic<std::uint64_t> loads_{0};
};

/// On-disk store written by write_mfa_store or write_ds_store.
class FileBlockStore final : public BlockSource {
public:
    explicit FileBlockStore(std::filesystem::path root);

    const LODManifest& manifest() const override { return manifest_; }
    const std::filesystem::path& root() const { return root_; }

protected:
    BlockHandle do_load(const BlockAddress& a) const override;

private:
    std::filesystem::path root_;
    LODManifest manifest_;
};

/// Already-decoded blocks held in memory.
class MemoryBlockSource final : public BlockSource {
public:
    MemoryBlockSource(LODManifest manifest, std::map<BlockAddress, BlockHandle> blocks);

    const LODManifest& manifest() const override { return manifest_; }

protected:
    BlockHandle do_load(const BlockAddress& a) const override;

private:
    LODManifest manifest_;
    std::map<BlockAddress, BlockHandle> blocks_;
};

std::shared_ptr<MemoryBlockSource> memory_source(const EncodeResult& result);
std::shared_ptr<MemoryBlockSource> memory_source(const DsStore& store);

}  // namespace microvol
