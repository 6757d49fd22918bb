#pragma once

#include <cstddef>
#include <string>

namespace snel {

// Read-only whole-file memory map. Zero-length files map to nullptr/0.
class MappedFile {
public:
    MappedFile() = default;
    explicit MappedFile(const std::string& path);
    ~MappedFile();

    MappedFile(MappedFile&& other) noexcept;
    MappedFile& operator=(MappedFile&& other) noexcept;
    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;

    const unsigned char* data() const { return data_; }
    std::size_t size() const { return size_; }
    const std::string& path() const { return path_; }

private:
    void reset();
    const unsigned char* data_ = nullptr;
    std::size_t size_ = 0;
    std::string path_;
};

}  // namespace snel
