#include "market/blobstore.hpp"

#include <cstring>

#include "market/errors.hpp"

namespace market {

ContentAddress ContentAddress::from_hex(std::string_view h) {
    Bytes b = market::from_hex(h);
    if (b.size() != 32) throw std::invalid_argument("content address must be 32 bytes");
    ContentAddress a;
    std::memcpy(a.digest.data(), b.data(), 32);
    return a;
}

ContentAddress BlobStore::put(Bytes blob) {
    if (blob.empty()) throw MarketError(Errc::EmptyBlob, "refusing to store empty blob");
    ContentAddress addr{hash32(blob)};
    blobs_.emplace(addr, std::move(blob));
    return addr;
}

const Bytes& BlobStore::get(const ContentAddress& addr) const {
    auto it = blobs_.find(addr);
    if (it == blobs_.end()) throw MarketError(Errc::NotFound, "no blob at " + addr.hex());
    return it->second;
}

}  // namespace market
