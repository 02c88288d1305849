#include "mfed/anonymize.hpp"

#include <cstring>
#include <fstream>

#include "mfed/errors.hpp"
#include "mfed/sha256.hpp"

using nlohmann::json;

namespace mfed::anon {

std::string pseudonymize(const std::string& patient_id, const std::string& site_key) {
    if (patient_id.empty()) throw err_malformed("patient_id must be nonempty");
    if (site_key.empty()) throw err_internal("site key not loaded");
    return "P-" + util::hmac_sha256_hex(site_key, patient_id).substr(0, 16);
}

namespace {

util::Digest derive_key(const std::string& site_key, const char* domain) {
    util::Sha256 h;
    h.update(site_key.data(), site_key.size());
    h.update(domain, std::strlen(domain));
    return h.finish();
}

void xor_keystream(std::uint8_t* data, std::size_t len, const util::Digest& key,
                   std::uint64_t nonce) {
    std::uint64_t counter = 0;
    std::size_t off = 0;
    while (off < len) {
        util::Sha256 h;
        h.update(key.data(), key.size());
        std::uint8_t block_hdr[16];
        for (int i = 0; i < 8; ++i) block_hdr[i] = static_cast<std::uint8_t>(nonce >> (56 - 8 * i));
        for (int i = 0; i < 8; ++i)
            block_hdr[8 + i] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
        h.update(block_hdr, sizeof block_hdr);
        util::Digest ks = h.finish();
        std::size_t take = std::min<std::size_t>(ks.size(), len - off);
        for (std::size_t i = 0; i < take; ++i) data[off + i] ^= ks[i];
        off += take;
        ++counter;
    }
}

constexpr std::size_t kTagLen = 16;

}  // namespace

std::string encrypt_line(const std::string& plaintext, const std::string& site_key,
                         std::uint64_t nonce) {
    util::Digest enc_key = derive_key(site_key, "/enc");
    util::Bytes buf(plaintext.begin(), plaintext.end());
    xor_keystream(buf.data(), buf.size(), enc_key, nonce);

    util::Bytes authed;
    for (int i = 0; i < 8; ++i) authed.push_back(static_cast<std::uint8_t>(nonce >> (56 - 8 * i)));
    authed.insert(authed.end(), buf.begin(), buf.end());

    std::string mac_key(reinterpret_cast<const char*>(derive_key(site_key, "/mac").data()), 32);
    util::Digest tag = util::hmac_sha256(
        mac_key, std::string_view(reinterpret_cast<const char*>(authed.data()), authed.size()));
    authed.insert(authed.end(), tag.begin(), tag.begin() + kTagLen);
    return util::base64_encode(authed);
}

std::string decrypt_line(const std::string& line, const std::string& site_key) {
    util::Bytes raw = util::base64_decode(line);
    if (raw.size() < 8 + kTagLen) throw err_malformed("reid map line too short");
    util::Bytes authed(raw.begin(), raw.end() - kTagLen);
    std::string mac_key(reinterpret_cast<const char*>(derive_key(site_key, "/mac").data()), 32);
    util::Digest tag = util::hmac_sha256(
        mac_key, std::string_view(reinterpret_cast<const char*>(authed.data()), authed.size()));
    if (!std::equal(tag.begin(), tag.begin() + kTagLen, raw.end() - kTagLen))
        throw err_malformed("reid map line failed authentication");

    std::uint64_t nonce = 0;
    for (int i = 0; i < 8; ++i) nonce = (nonce << 8) | authed[i];
    util::Bytes buf(authed.begin() + 8, authed.end());
    util::Digest enc_key = derive_key(site_key, "/enc");
    xor_keystream(buf.data(), buf.size(), enc_key, nonce);
    return std::string(buf.begin(), buf.end());
}

ReidentificationMap::ReidentificationMap(std::filesystem::path path, std::string site_key)
    : path_(std::move(path)), site_key_(std::move(site_key)) {
    if (site_key_.empty()) throw err_internal("site key not loaded");
    load();
}

void ReidentificationMap::load() {
    entries_.clear();
    if (!std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(decrypt_line(line, site_key_));
        entries_[j.at("pseudonym").get<std::string>()] = j.at("identifiers");
    }
}

void ReidentificationMap::record(const std::string& pseudonym, const json& identifiers) {
    std::lock_guard lk(mu_);
    if (entries_.count(pseudonym)) return;
    json j{{"pseudonym", pseudonym}, {"identifiers", identifiers}};
    // nonce = entry ordinal; unique per line within one map file
    std::string line = encrypt_line(j.dump(), site_key_, entries_.size());
    std::ofstream out(path_, std::ios::app);
    if (!out) throw err_internal("cannot append to reid map " + path_.string());
    out << line << "\n";
    out.flush();
    if (!out) throw err_internal("short write on reid map");
    entries_[pseudonym] = identifiers;
}

json ReidentificationMap::lookup(const std::string& pseudonym) const {
    std::lock_guard lk(mu_);
    auto it = entries_.find(pseudonym);
    return it == entries_.end() ? json(nullptr) : it->second;
}

std::size_t ReidentificationMap::size() const {
    std::lock_guard lk(mu_);
    return entries_.size();
}

StripResult strip_identifiers(const json& header, const std::string& site_key) {
    if (!header.is_object()) throw err_malformed("container header must be an object");
    if (header.value("consent", "") != "Y")
        throw err_consent_missing("patient consent flag is not set");
    std::string patient_id = header.value("patient_id", "");
    if (patient_id.empty()) throw err_malformed("container header missing patient_id");

    StripResult r;
    r.pseudonym = pseudonymize(patient_id, site_key);
    r.identifiers = json{{"patient_name", header.value("patient_name", "")},
                         {"patient_id", patient_id},
                         {"birth_date", header.value("birth_date", "")}};

    r.sanitized = header;
    r.sanitized.erase("patient_name");
    r.sanitized.erase("birth_date");
    r.sanitized["patient_id"] = r.pseudonym;
    std::string birth_date = header.value("birth_date", "");
    if (birth_date.size() >= 4) {
        int year = 0;
        for (int i = 0; i < 4; ++i) {
            char c = birth_date[i];
            if (c < '0' || c > '9') throw err_malformed("birth_date must start with a year");
            year = year * 10 + (c - '0');
        }
        r.sanitized["birth_year"] = year;
    } else {
        throw err_malformed("birth_date must start with a year");
    }
    return r;
}

}  // namespace mfed::anon
