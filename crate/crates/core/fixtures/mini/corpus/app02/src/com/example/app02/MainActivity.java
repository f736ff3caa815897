package com.example.app02;

public class MainActivity {
    private String name = "item 2";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 2);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
