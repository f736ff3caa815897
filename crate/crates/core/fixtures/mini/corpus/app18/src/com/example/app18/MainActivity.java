package com.example.app18;

public class MainActivity {
    private String name = "item 18";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 18);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
