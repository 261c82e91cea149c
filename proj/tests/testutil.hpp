#ifndef EKMID_TESTUTIL_HPP
#define EKMID_TESTUTIL_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testutil {

// Independent format-212 packer, written from the published byte layout (not
// from the decoder): sample pairs a,b -> [a7..a0, b11..b8|a11..a8, b7..b0].
inline std::vector<uint8_t> encode212(const std::vector<int>& samples) {
    std::vector<uint8_t> out;
    out.reserve((samples.size() * 3 + 1) / 2);
    for (size_t i = 0; i < samples.size(); i += 2) {
        uint16_t a = static_cast<uint16_t>(samples[i]) & 0x0FFF;
        uint16_t b = (i + 1 < samples.size()) ? static_cast<uint16_t>(samples[i + 1]) & 0x0FFF : 0;
        out.push_back(static_cast<uint8_t>(a & 0xFF));
        out.push_back(static_cast<uint8_t>(((a >> 8) & 0x0F) | (((b >> 8) & 0x0F) << 4)));
        out.push_back(static_cast<uint8_t>(b & 0xFF));
    }
    return out;
}

inline std::vector<uint8_t> encode16(const std::vector<int>& samples) {
    std::vector<uint8_t> out;
    out.reserve(samples.size() * 2);
    for (int s : samples) {
        uint16_t u = static_cast<uint16_t>(static_cast<int16_t>(s));
        out.push_back(static_cast<uint8_t>(u & 0xFF));
        out.push_back(static_cast<uint8_t>(u >> 8));
    }
    return out;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        path_ = base / (tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<uint8_t>& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(f),
                                std::istreambuf_iterator<char>());
}

}  // namespace testutil

#endif
