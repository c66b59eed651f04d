#pragma once

#include <compare>
#include <map>

#include "market/bytes.hpp"

namespace market {

struct ContentAddress {
    Digest digest{};

    auto operator<=>(const ContentAddress&) const = default;
    std::string hex() const { return to_hex(digest); }
    static ContentAddress from_hex(std::string_view h);
};

/// Content-addressed blob store. The indirection layer between sellers and
/// buyers: parties exchange addresses, never endpoints.
class BlobStore {
public:
    /// Throws EmptyBlob. Idempotent: identical blobs share one address.
    ContentAddress put(Bytes blob);

    /// Throws NotFound.
    const Bytes& get(const ContentAddress& addr) const;

    bool contains(const ContentAddress& addr) const { return blobs_.count(addr) > 0; }
    std::size_t size() const { return blobs_.size(); }

    const std::map<ContentAddress, Bytes>& all_blobs() const { return blobs_; }

    /// Modeled retrieval latency; consumers wait this many epochs per get.
    std::uint64_t retrieval_latency_epochs = 0;

private:
    std::map<ContentAddress, Bytes> blobs_;
};

}  // namespace market
