class EmptyBody {
    void nothing() {}
}
