#include "microvol/block_source.hpp"

#include <fstream>
#include <iterator>
#include <thread>
#include <vector>

#include "microvol/errors.hpp"

namespace microvol {

BlockHandle BlockSource::load(const BlockAddress& a) const {
    if (hook_) hook_(a);
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    loads_.fetch_add(1);
    return do_load(a);
}

FileBlockStore::FileBlockStore(std::filesystem::path root) : root_(std::move(root)) {
    manifest_ = load_manifest(root_ / "manifest.json");
    if (manifest_.backend != "mfa" && manifest_.backend != "ds") {
        throw FormatError("unknown store backend '" + manifest_.backend + "'");
    }
}

BlockHandle FileBlockStore::do_load(const BlockAddress& a) const {
    const auto it = manifest_.entries.find(a);
    if (it == manifest_.entries.end()) throw IoError("block " + a.to_string() + " is not in the manifest");
    const ManifestEntry& e = it->second;
    const auto path = root_ / e.path;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("block " + a.to_string() + ": cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        if (manifest_.backend == "ds") return std::make_shared<DsBlock>(deserialize_ds(bytes, e.extent, a.lod));
        return std::make_shared<MfaBlock>(deserialize(bytes, e.ncp, e.extent, a.lod));
    } catch (const Error& err) {
        throw FormatError("block " + a.to_string() + " (" + path.string() + "): " + err.what());
    }
}

MemoryBlockSource::MemoryBlockSource(LODManifest manifest, std::map<BlockAddress, BlockHandle> blocks)
    : manifest_(std::move(manifest)), blocks_(std::move(blocks)) {}

BlockHandle MemoryBlockSource::do_load(const BlockAddress& a) const {
    const auto it = blocks_.find(a);
    if (it == blocks_.end() || !it->second) throw IoError("block " + a.to_string() + " is not in the source");
    return it->second;
}

std::shared_ptr<MemoryBlockSource> memory_source(const EncodeResult& result) {
    std::map<BlockAddress, BlockHandle> blocks;
    for (const auto& [a, b] : result.blocks) blocks.emplace(a, std::make_shared<MfaBlock>(b.model));
    return std::make_shared<MemoryBlockSource>(result.manifest, std::move(blocks));
}

std::shared_ptr<MemoryBlockSource> memory_source(const DsStore& store) {
    std::map<BlockAddress, BlockHandle> blocks;
    for (const auto& [a, b] : store.blocks) blocks.emplace(a, std::make_shared<DsBlock>(b));
    return std::make_shared<MemoryBlockSource>(store.manifest, std::move(blocks));
}

}  // namespace microvol
