class Granularity {
    static int counter = 0;

    static {
        counter = seed();
    }

    void alpha() {
        work(); more();
    }

    class Inner {
        void gamma() {
            g();
        }
    }

    int beta() {
        if (flag) {
            branch();
        }
        return 0;
    }
}
